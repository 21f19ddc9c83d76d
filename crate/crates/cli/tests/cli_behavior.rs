//! End-to-end checks of the `svi` binary: exit codes, output files, CSV
//! emission, and the tolerance override hook.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn svi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svi"))
        .args(args)
        .output()
        .expect("binary spawns")
}

#[test]
fn clean_spec_exits_zero_with_report_on_stdout() {
    let out = svi(&["run", "--spec", fixture("cubic.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["tool"], "svi");
    assert_eq!(report["seed"], 41);
    assert_eq!(report["analyses"].as_array().unwrap().len(), 5);
    assert!(report.get("timings").is_none());
}

#[test]
fn violated_certification_exits_two() {
    let out = svi(&["run", "--spec", fixture("adversarial.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["analyses"][0]["output"]["verdict"], "violated");
}

#[test]
fn schema_violation_exits_one() {
    let out = svi(&["run", "--spec", fixture("malformed.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("surprise"), "stderr: {err}");
}

#[test]
fn missing_file_exits_one() {
    let out = svi(&["run", "--spec", "/nonexistent/spec.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validate_reports_counts_without_running() {
    let out = svi(&["validate", "--spec", fixture("full.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("6 instance(s)"), "stdout: {text}");
    let bad = svi(&["validate", "--spec", fixture("malformed.json").to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn report_can_be_written_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let out = svi(&[
        "run",
        "--spec",
        fixture("shift.json").to_str().unwrap(),
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&target).unwrap()).unwrap();
    assert_eq!(report["analyses"].as_array().unwrap().len(), 8);
}

#[test]
fn csv_series_has_twelve_significant_digits() {
    let out = svi(&[
        "run",
        "--spec",
        fixture("divergence.json").to_str().unwrap(),
        "--csv",
        "sqrt-rate",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("scale,estimate"));
    let first = lines.next().unwrap();
    assert_eq!(first, "1.00000000000e-1,3.16227766017e0");
}

#[test]
fn seed_flag_overrides_the_spec_seed() {
    let path = fixture("shift.json");
    let base = svi(&["run", "--spec", path.to_str().unwrap()]);
    let reseeded = svi(&["run", "--spec", path.to_str().unwrap(), "--seed", "99"]);
    let a: serde_json::Value = serde_json::from_slice(&base.stdout).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&reseeded.stdout).unwrap();
    assert_eq!(a["seed"], 42);
    assert_eq!(b["seed"], 99);
    // Same spec digest either way.
    assert_eq!(a["input_sha256"], b["input_sha256"]);
}

#[test]
fn only_flag_unknown_id_fails() {
    let out = svi(&[
        "run",
        "--spec",
        fixture("shift.json").to_str().unwrap(),
        "--only",
        "no-such-analysis",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tolerance_override_env_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let tol_path = dir.path().join("tol.json");
    std::fs::write(
        &tol_path,
        r#"{ "membership": 1e-6, "root": 1e-6, "val": 1e-6, "slope_zero": 1e-6 }"#,
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_svi"))
        .args(["run", "--spec", fixture("cubic.json").to_str().unwrap()])
        .env("SVI_TOL_OVERRIDE", &tol_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let broken = Command::new(env!("CARGO_BIN_EXE_svi"))
        .args(["run", "--spec", fixture("cubic.json").to_str().unwrap()])
        .env("SVI_TOL_OVERRIDE", dir.path().join("missing.json"))
        .output()
        .unwrap();
    assert_eq!(broken.status.code(), Some(1));
}

#[test]
fn timings_flag_adds_a_machine_dependent_block() {
    let path = fixture("cubic.json");
    let with = svi(&["run", "--spec", path.to_str().unwrap(), "--timings"]);
    let report: serde_json::Value = serde_json::from_slice(&with.stdout).unwrap();
    assert_eq!(
        report["timings"].as_array().unwrap().len(),
        report["analyses"].as_array().unwrap().len()
    );
}
