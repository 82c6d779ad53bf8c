use clap::Parser;

fn main() {
    let cli = optomx_cli::Cli::parse();
    std::process::exit(optomx_cli::execute(&cli));
}
