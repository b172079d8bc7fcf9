//! End-to-end checks of the `offload` binary: exit codes and output files.

use std::fs;
use std::path::Path;
use std::process::Command;

fn offload() -> Command {
    Command::new(env!("CARGO_BIN_EXE_offload"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).expect("write config");
    path
}

#[test]
fn verify_runs_and_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "tiny.toml",
        r#"
kind = "supernetwork-verify"
sweep = [3]
seeds = [0]
tables_per_size = 3
walks_per_table = 5
"#,
    );
    let out = tmp.path().join("out");
    let status = offload()
        .args(["supernetwork-verify", "--no-plot", "--jobs", "1"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .expect("binary runs");
    assert!(status.success(), "expected exit 0, got {status:?}");
    let csvs: Vec<_> = fs::read_dir(&out)
        .expect("output directory exists")
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .collect();
    assert!(!csvs.is_empty(), "verification should emit CSV tables");
}

#[test]
fn broken_config_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "broken.toml", "kind = [\n");
    let status = offload()
        .args(["simulate", "--no-plot"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .status()
        .expect("binary runs");
    assert_eq!(status.code(), Some(1), "config errors must exit 1");
}

#[test]
fn invalid_parameter_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad-param.toml",
        r#"
kind = "convergence"
sweep = [0]
seeds = [0]
"#,
    );
    let status = offload()
        .args(["sweep", "convergence", "--no-plot"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .status()
        .expect("binary runs");
    assert_eq!(
        status.code(),
        Some(1),
        "a zero-user population must be rejected as a parameter error"
    );
}

#[test]
fn unknown_flag_exits_one() {
    let status = offload()
        .arg("--definitely-not-a-flag")
        .status()
        .expect("binary runs");
    assert_eq!(status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let status = offload().arg("--help").status().expect("binary runs");
    assert_eq!(status.code(), Some(0));
}
