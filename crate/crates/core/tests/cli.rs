use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[grid]
nodes = [17, 17]

[run]
t_end = 0.5
"#;

fn simulate(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simulate"))
        .args(args)
        .current_dir(dir)
        .env_remove("SIMULATE_OUT_DIR")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn single_run_writes_manifest_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("res");
    let res = simulate(&[&cfg, "--out", out.to_str().unwrap()], dir.path());
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("diagnostics.csv"));
    assert!(out.join("S_t0.5000.csv").exists());
    assert!(out.join("I_t0.0000.pgm").exists());
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[grid]\nnodez = [9, 9]\n");
    let res = simulate(&[&cfg], dir.path());
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("nodez"), "{err}");
}

#[test]
fn unknown_mode_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let res = simulate(&[&cfg, "--mode", "nonsense"], dir.path());
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn invalid_parameter_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let res = simulate(&[&cfg, "--override", "params.mu_i=-1"], dir.path());
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn emitted_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let first = simulate(&[&cfg, "--override", "params.k=3.5", "--emit-config"], dir.path());
    assert!(first.status.success());
    let emitted = String::from_utf8(first.stdout).unwrap();
    let again = write_config(dir.path(), &emitted);
    let second = simulate(&[&again, "--emit-config"], dir.path());
    assert_eq!(emitted, String::from_utf8(second.stdout).unwrap());
    assert!(emitted.contains("k = 3.5"));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("from-env");
    let res = Command::new(env!("CARGO_BIN_EXE_simulate"))
        .arg(&cfg)
        .current_dir(dir.path())
        .env("SIMULATE_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(res.status.success());
    assert!(out.join("manifest.txt").exists());
}

#[test]
fn mms_mode_reports_orders() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[mms]\nnodes = [17, 33, 65]\n");
    let out = dir.path().join("mms");
    let res = simulate(&[&cfg, "--mode", "mms", "--out", out.to_str().unwrap()], dir.path());
    assert!(res.status.success());
    let table = fs::read_to_string(out.join("mms.csv")).unwrap();
    assert!(table.lines().count() > 3);
}
