use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
phantom_patients = 3
phantom_size = 96
";

fn optomx(cfg: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optomx"))
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn corrupted_manifest_fails_at_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.csv");
    std::fs::write(&manifest, "slice,patient\nP01-S1,P01\n").unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, format!("manifest = {:?}\n", manifest.display().to_string())).unwrap();
    let o = optomx(&cfg, &dir.path().join("out"), &["preprocess"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("stage ingest"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "gray_level = 16\n").unwrap();
    let o = optomx(&cfg, &dir.path().join("out"), &["config"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gray_level"), "{}", stderr(&o));
}

#[test]
fn config_prints_effective_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_optomx"))
        .args(["--config", cfg.to_str().unwrap(), "--seed", "7", "config"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("seed = 7"));
    assert!(text.contains("phantom_size = 96"));
    assert!(text.contains("gray_levels = 32"));
}

#[test]
fn bad_thread_env_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_optomx"))
        .args(["--config", cfg.to_str().unwrap(), "config"])
        .env("OPTOMX_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn artifacts_from_another_config_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("out");
    for stage in ["phantom", "preprocess", "partition"] {
        let o = optomx(&cfg, &out, &[stage]);
        assert!(o.status.success(), "{stage}: {}", stderr(&o));
    }
    assert!(std::fs::read_to_string(out.join("partition.csv"))
        .unwrap()
        .starts_with("# config_hash: "));

    // A different seed is a different configuration.
    let o = optomx(&cfg, &out, &["--seed", "99", "sample"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("stage sample"), "{}", stderr(&o));

    // The thread count is not part of the configuration.
    let o = optomx(&cfg, &out, &["--threads", "2", "sample"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn stages_need_their_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let o = optomx(&cfg, &dir.path().join("empty"), &["report"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("stage report"), "{}", stderr(&o));
}
