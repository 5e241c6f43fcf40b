//! Report files: per-`m` diagnostics CSV, `summary.json`, snapshot
//! binaries, and wall-clock timings kept apart from the deterministic
//! outputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::snapshot::write_snapshot;

use super::refine::RefinementReport;
use super::sweep::SweepReport;

pub const SCHEMA_VERSION: u32 = 1;
pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMING_FILE: &str = "timing.json";
pub const REFINEMENT_FILE: &str = "refinement.json";
pub const SNAPSHOT_DIR: &str = "snapshots";

pub fn csv_name(m: f64) -> String {
    format!("diagnostics_m{m}.csv")
}

fn snapshot_name(kind: &str, m: f64, k: usize) -> String {
    format!("{SNAPSHOT_DIR}/{kind}_m{m}_{k:03}.pmef")
}

pub fn write_csv(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    if records.is_empty() {
        w.write_record(DiagnosticsRecord::COLUMNS).map_err(io)?;
    }
    for r in records {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Format(format!("{}: {e}", path.display()))))
        .collect()
}

/// The deterministic sweep summary (schema version 1).
pub fn summary_json(report: &SweepReport) -> Value {
    let runs: Vec<Value> = report
        .runs
        .iter()
        .map(|run| {
            let snapshots: Vec<Value> = run
                .snapshots
                .iter()
                .enumerate()
                .map(|(k, (rho, _))| {
                    json!({
                        "t": rho.t,
                        "rho": snapshot_name("rho", run.m, k),
                        "p": snapshot_name("p", run.m, k),
                    })
                })
                .collect();
            json!({
                "m": run.m,
                "csv": csv_name(run.m),
                "samples": run.records.len(),
                "steps": run.steps,
                "max_sup_p": run.max_sup_p,
                "boundary_mass_ratio": run.boundary_mass_ratio,
                "boundary_flag": run.boundary_flag,
                "time_integrals": run.time_integrals,
                "final": run.final_record(),
                "snapshots": snapshots,
            })
        })
        .collect();
    json!({
        "schema_version": SCHEMA_VERSION,
        "label": report.config.label(),
        "config": report.config,
        "columns": DiagnosticsRecord::COLUMNS,
        "exponents": report.exponents(),
        "sample_times": report.sample_times(),
        "runs": runs,
        "residuals": report.residuals,
        "residual_ratios": report.residual_ratios,
        "proxies": {
            "excess": report.excess,
            "p_times_onemrho": report.p_times_onemrho,
            "rho_gradp_defect": report.rho_gradp_defect,
        },
        "cauchy": {
            "grad_p_frac": report.cauchy_frac,
            "grad_p": report.cauchy_pressure,
        },
    })
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes every report file into `dir` and returns their paths.
pub fn export_sweep(report: &SweepReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir.join(SNAPSHOT_DIR)).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for run in &report.runs {
        let path = dir.join(csv_name(run.m));
        write_csv(&path, &run.records)?;
        written.push(path);
        for (k, (rho, p)) in run.snapshots.iter().enumerate() {
            for (kind, snap) in [("rho", rho), ("p", p)] {
                let path = dir.join(snapshot_name(kind, run.m, k));
                write_snapshot(&path, snap)?;
                written.push(path);
            }
        }
    }
    let path = dir.join(SUMMARY_FILE);
    write_json(&path, &summary_json(report))?;
    written.push(path);
    let timing: Vec<Value> = report
        .runs
        .iter()
        .map(|r| json!({ "m": r.m, "wall_seconds": r.wall_seconds, "steps": r.steps }))
        .collect();
    let path = dir.join(TIMING_FILE);
    write_json(&path, &json!({ "runs": timing }))?;
    written.push(path);
    Ok(written)
}

pub fn export_refinement(report: &RefinementReport, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut value = serde_json::to_value(report).expect("report serializes");
    value["schema_version"] = json!(SCHEMA_VERSION);
    let path = dir.join(REFINEMENT_FILE);
    write_json(&path, &value)?;
    Ok(path)
}
