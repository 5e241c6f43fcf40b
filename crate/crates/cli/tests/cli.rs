use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pme(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pme"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

const SMALL_RUN: &str = r#"{
    "grid": {"dim": 2, "half_width": 4.0, "cells": 32},
    "exponents": [8.0, 16.0],
    "growth": {"kind": "smooth_tanh", "max_rate": 4.0, "homeostatic_pressure": 1.0},
    "pressure_ceiling": 2.0,
    "kernel": "newtonian",
    "initial": {"kind": "bumps", "centers": [[0.0, 0.0]], "radius": 1.0, "amplitude": 0.9},
    "final_time": 0.01,
    "samples": 3,
    "snapshot_times": [0.01]
}"#;

#[test]
fn sweep_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.json", SMALL_RUN);
    let out = dir.path().join("out");
    let o = pme(&[
        "sweep",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value =
        serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["exponents"], serde_json::json!([8.0, 16.0]));
    assert!(out.join("diagnostics_m8.csv").exists());
    assert!(out.join("snapshots/rho_m16_000.pmef").exists());
}

#[test]
fn run_selects_one_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.json", SMALL_RUN);
    let out = dir.path().join("out");
    let o = pme(&["run", &config, "--m", "16", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("diagnostics_m16.csv").exists());
    assert!(!out.join("diagnostics_m8.csv").exists());
}

#[test]
fn bad_input_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let bad = write(
        dir.path(),
        "bad.json",
        &SMALL_RUN.replace("\"cells\": 32", "\"cells\": 0"),
    );
    let o = pme(&["sweep", &bad, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid"));

    let missing = dir.path().join("missing.json");
    assert_eq!(
        pme(&["sweep", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(
        pme(&["export-config", "--preset", "nope"]).status.code(),
        Some(2)
    );
    assert!(!out.join("failure.json").exists());
}

#[test]
fn numerical_failure_exits_with_3_and_dumps() {
    // Growth pushes the density past 1 in the first step, and ρ^6000 overflows.
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "overflow.json",
        r#"{
            "grid": {"dim": 1, "half_width": 2.0, "cells": 32},
            "exponents": [6000.0],
            "growth": {"kind": "smooth_tanh", "max_rate": 4.0, "homeostatic_pressure": 1.0},
            "kernel": "off",
            "initial": {"kind": "patch", "half_width": 0.5, "value": 0.9},
            "final_time": 0.5,
            "samples": 2
        }"#,
    );
    let out = dir.path().join("out");
    let o = pme(&["run", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let dump: Value = serde_json::from_slice(&fs::read(out.join("failure.json")).unwrap()).unwrap();
    assert_eq!(dump["m"], 6000.0);
    assert!(dump["error"].as_str().unwrap().contains("non-finite"));
}

#[test]
fn export_config_round_trips_presets() {
    let dir = tempfile::tempdir().unwrap();
    for name in [
        "default_sweep",
        "mass_balance",
        "barenblatt_1d",
        "barenblatt_2d",
    ] {
        let path = dir.path().join(format!("{name}.json"));
        let o = pme(&[
            "export-config",
            "--preset",
            name,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        let checked_in =
            Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../configs/{name}.json"));
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            fs::read_to_string(checked_in).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn check_passes() {
    let o = pme(&["check"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().count() >= 10);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn refine_reports_orders() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/barenblatt_1d.json");
    let o = pme(&[
        "refine",
        config.to_str().unwrap(),
        "--cells",
        "32,64",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value =
        serde_json::from_slice(&fs::read(out.join("refinement.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["exact_orders"].as_array().unwrap().len(), 1);
}
