//! End-to-end checks of the command-line interface: exit codes, CSV schema,
//! validation-before-output, and bit-identical manifest replay.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracdual"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn fracdual")
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("fracdual-cli-{}-{name}", std::process::id()));
    p
}

#[test]
fn gaussian_point_value_and_schema() {
    let out = run(&[
        "density", "--alpha", "2", "--asym", "0", "--x-min", "0", "--x-max", "0", "--points", "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("x,value"));
    let row = lines.next().expect("one data row");
    let mut cols = row.split(',');
    let x: f64 = cols.next().unwrap().parse().unwrap();
    let v: f64 = cols.next().unwrap().parse().unwrap();
    assert_eq!(cols.next(), None);
    assert_eq!(x, 0.0);
    // Standard normal-at-origin value of the index-2 density at unit scale.
    assert!((v - 0.28209479177387814).abs() < 1e-12, "{v}");
    assert_eq!(lines.next(), None);
    // Manifest goes to stderr when output is stdout.
    let stderr = String::from_utf8(out.stderr).unwrap();
    let m: serde_json::Value = serde_json::from_str(stderr.trim()).expect("manifest JSON");
    assert_eq!(m["subcommand"], "density");
    assert_eq!(m["output"], "stdout");
}

#[test]
fn invalid_params_exit_2() {
    let out = run(&["density", "--alpha", "2.5"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["inverse-density", "--gamma", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["simulate", "--process", "E", "--gamma", "0.5", "--n", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_convergence_exit_3() {
    // At the default 200-term cap this evaluation cannot converge and must
    // surface as an error, not a number.
    let out = run(&[
        "density", "--alpha", "1.1", "--asym", "0.9", "--x-min", "2.2", "--x-max", "2.2",
        "--points", "1",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn cfl_violation_exit_3() {
    let out = run(&[
        "solve", "--alpha", "1.5", "--b", "1", "--dx", "0.1", "--dt", "0.5", "--x-max", "2",
        "--t-end", "1",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn nothing_written_on_validation_failure() {
    let path = tmp("reject.csv");
    let _ = std::fs::remove_file(&path);
    let out = run(&[
        "density", "--alpha", "2.5", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!path.exists(), "output file must not be created on failure");
    assert!(
        !PathBuf::from(format!("{}.manifest.json", path.display())).exists(),
        "manifest must not be created on failure"
    );
}

#[test]
fn manifest_replay_is_bit_identical() {
    let first = tmp("run1.csv");
    let second = tmp("run2.csv");
    let _ = std::fs::remove_file(&first);
    let _ = std::fs::remove_file(&second);
    let out = run(&[
        "density", "--alpha", "1.5", "--asym", "0.3", "--x-min", "-2", "--x-max", "2",
        "--points", "21", "--out", first.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = format!("{}.manifest.json", first.display());
    let out = run(&[
        "replay", "--manifest", &manifest, "--out", second.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = std::fs::read(&first).unwrap();
    let b = std::fs::read(&second).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "replayed output differs from the original");
}

#[test]
fn seeded_simulation_replay_is_bit_identical() {
    let first = tmp("sim1.csv");
    let second = tmp("sim2.csv");
    let _ = std::fs::remove_file(&first);
    let _ = std::fs::remove_file(&second);
    let out = run(&[
        "simulate", "--process", "E", "--gamma", "0.6", "--t", "0.5", "--n", "2000",
        "--seed", "7", "--bins", "20", "--out", first.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = format!("{}.manifest.json", first.display());
    let out = run(&["replay", "--manifest", &manifest, "--out", second.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}
