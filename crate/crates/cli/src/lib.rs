//! Command-line orchestration of the optomics pipeline.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod stages;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use optomx::ErrorKind;

pub use config::RunConfig;
pub use stages::{Ctx, StageError};

#[derive(Debug, Parser)]
#[command(name = "optomx", version, about = "Optomics tissue classification for wide-field fluorescence images")]
pub struct Cli {
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the `seed` key.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (falls back to OPTOMX_THREADS, then the `threads` key).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides the `out_dir` key.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Write a synthetic study to `<out>/study`.
    Phantom,
    /// Background subtraction, calibration and unit-range rescale.
    Preprocess,
    /// Per-dose-group train/test split of slices.
    Partition,
    /// Draw patch centers in every slice.
    Sample,
    /// Compute the feature table for every patch size.
    Extract,
    /// Leave-one-slice-out grid search and feature-count selection.
    Cv,
    /// Fit the final pipeline for every patch size.
    Train,
    /// Intensity-threshold baseline on the test slices.
    EvalThreshold,
    /// Patch-level metrics of the trained pipelines on the test slices.
    EvalOptomics,
    /// Probability maps of the test slices.
    Probmap,
    /// Paired comparison of the two methods.
    Report,
    /// Every stage in order; generates a phantom study if none is given.
    Run,
    /// Print the effective configuration as TOML.
    Config,
}

/// Exit code for an error category.
pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numeric => 4,
    }
}

/// Resolves the configuration from the file, flags and environment.
pub fn resolve_config(cli: &Cli) -> optomx::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.display().to_string();
    }
    let env = std::env::var("OPTOMX_THREADS").ok();
    if let Some(t) = cli.threads {
        cfg.threads = t;
    } else if let Some(v) = env {
        cfg.threads = v
            .trim()
            .parse()
            .map_err(|_| optomx::Error::BadConfig(format!("OPTOMX_THREADS={v:?} is not a count")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one subcommand; returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let cfg = match resolve_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: stage config: {e}");
            return exit_code(e.kind());
        }
    };
    if let Command::Config = cli.command {
        print!("{}", cfg.to_toml());
        return 0;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: stage config: thread pool: {e}");
            return 2;
        }
    };
    let ctx = Ctx::new(cfg);
    let res = pool.install(|| match cli.command {
        Command::Phantom => ctx.phantom().map(|_| ()),
        Command::Preprocess => ctx.preprocess(),
        Command::Partition => ctx.partition(),
        Command::Sample => ctx.sample(),
        Command::Extract => ctx.extract(),
        Command::Cv => ctx.cv(),
        Command::Train => ctx.train(),
        Command::EvalThreshold => ctx.eval_threshold(),
        Command::EvalOptomics => ctx.eval_optomics(),
        Command::Probmap => ctx.probmap(),
        Command::Report => ctx.report(),
        Command::Run => ctx.run(),
        Command::Config => unreachable!(),
    });
    match res {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(e.source.kind())
        }
    }
}
