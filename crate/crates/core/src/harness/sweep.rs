//! Runs over a list of exponents and the cross-`m` metrics built from them.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{time_integral, trapezoid, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::grid::{gradient_energy_density, integrate, ScalarField};
use crate::model::power;
use crate::snapshot::Snapshot;
use crate::stepper::{RunOptions, Stepper};

use super::config::RunConfig;

/// Relative boundary-layer mass above which a run is flagged.
pub const BOUNDARY_MASS_TOLERANCE: f64 = 1e-6;

/// Trapezoid-in-time integrals of the functionals bounded uniformly in `m`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TimeIntegrals {
    pub grad_p_sq: f64,
    pub grad_p_frac_sq: f64,
    pub rho_pow_int: f64,
    pub stiff_energy: f64,
    pub hess_energy: f64,
}

impl TimeIntegrals {
    pub fn of(records: &[DiagnosticsRecord]) -> Self {
        Self {
            grad_p_sq: time_integral(records, |r| r.grad_p_sq),
            grad_p_frac_sq: time_integral(records, |r| r.grad_p_frac_sq),
            rho_pow_int: time_integral(records, |r| r.rho_pow_int),
            stiff_energy: time_integral(records, |r| r.stiff_energy),
            hess_energy: time_integral(records, |r| r.hess_energy),
        }
    }
}

/// Outcome of one run at one exponent.
#[derive(Clone, Debug)]
pub struct MRun {
    pub m: f64,
    pub records: Vec<DiagnosticsRecord>,
    pub steps: u64,
    /// Largest pressure after any step.
    pub max_sup_p: f64,
    /// Largest boundary-layer mass over the samples relative to the initial mass.
    pub boundary_mass_ratio: f64,
    pub boundary_flag: bool,
    /// Density and pressure at each snapshot time.
    pub snapshots: Vec<(Snapshot, Snapshot)>,
    pub final_density: ScalarField,
    pub time_integrals: TimeIntegrals,
    pub wall_seconds: f64,
    /// `ρ^(m+1)` and `p` at every sample, for the Cauchy distances.
    trajectory: Vec<(ScalarField, ScalarField)>,
}

impl MRun {
    pub fn final_record(&self) -> Option<&DiagnosticsRecord> {
        self.records.last()
    }
}

/// Per-exponent series plus cross-`m` metrics.
#[derive(Clone, Debug)]
pub struct SweepReport {
    pub config: RunConfig,
    pub runs: Vec<MRun>,
    /// `R_m` at the final time, one per run.
    pub residuals: Vec<f64>,
    /// `R_{m_{k+1}} / R_{m_k}`.
    pub residual_ratios: Vec<f64>,
    pub excess: Vec<f64>,
    pub p_times_onemrho: Vec<f64>,
    pub rho_gradp_defect: Vec<f64>,
    /// `D(m, m')` for `∇ρ^(m+1) = ∇p^((m+1)/m)`.
    pub cauchy_frac: Vec<Vec<f64>>,
    /// `D(m, m')` for `∇p`.
    pub cauchy_pressure: Vec<Vec<f64>>,
}

impl SweepReport {
    pub fn exponents(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.m).collect()
    }

    pub fn sample_times(&self) -> Vec<f64> {
        self.runs
            .first()
            .map(|r| r.records.iter().map(|x| x.t).collect())
            .unwrap_or_default()
    }
}

/// One run of `config` at exponent `m`.
pub fn run_single(config: &RunConfig, m: f64) -> Result<MRun> {
    run_single_inner(config, m).map_err(|e| Error::RunFailed {
        m,
        source: Box::new(e),
    })
}

fn run_single_inner(config: &RunConfig, m: f64) -> Result<MRun> {
    let start = Instant::now();
    let grid = config.grid_spec()?;
    let params = config.model_params(grid, m)?;
    let init = config.initial_density(grid, m)?;
    let mass0 = integrate(&init);
    let mut stepper = Stepper::new(params)?.with_cfl(config.cfl)?;
    let options = RunOptions {
        final_time: config.final_time,
        samples: config.samples,
        snapshot_times: config.snapshot_times.clone(),
        l4_alpha: config.l4_alpha,
    };
    let mut trajectory = Vec::new();
    let mut snapshots = Vec::new();
    let summary = stepper.run(init, &options, |obs| {
        let rho = obs.state.density();
        if obs.record.is_some() {
            let frac = rho.map(|r| power(r, m + 1.0));
            trajectory.push((frac, obs.state.pressure().clone()));
        }
        if obs.snapshot {
            let t = obs.state.time();
            snapshots.push((
                Snapshot {
                    t,
                    m,
                    field: rho.clone(),
                },
                Snapshot {
                    t,
                    m,
                    field: obs.state.pressure().clone(),
                },
            ));
        }
        Ok(())
    })?;
    let boundary_max = summary
        .records
        .iter()
        .map(|r| r.boundary_mass)
        .fold(0.0, f64::max);
    let boundary_mass_ratio = if mass0 > 0.0 {
        boundary_max / mass0
    } else {
        0.0
    };
    Ok(MRun {
        m,
        time_integrals: TimeIntegrals::of(&summary.records),
        steps: summary.steps,
        max_sup_p: summary.max_sup_p,
        boundary_mass_ratio,
        boundary_flag: boundary_mass_ratio > BOUNDARY_MASS_TOLERANCE,
        snapshots,
        final_density: summary.final_state.density().clone(),
        records: summary.records,
        wall_seconds: start.elapsed().as_secs_f64(),
        trajectory,
    })
}

/// Runs every exponent of `config`, on `threads` worker threads (`None`
/// for the global pool, `Some(1)` for a serial sweep).
pub fn run_m_sweep(config: &RunConfig, threads: Option<usize>) -> Result<SweepReport> {
    config.validate()?;
    let run_all = || -> Result<Vec<MRun>> {
        config
            .exponents
            .par_iter()
            .map(|&m| run_single(config, m))
            .collect()
    };
    let runs = match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(run_all)?,
        None => run_all()?,
    };
    Ok(assemble(config.clone(), runs))
}

/// Report from already-completed runs; runs must share their sampling times.
pub fn assemble(config: RunConfig, runs: Vec<MRun>) -> SweepReport {
    let last = |f: fn(&DiagnosticsRecord) -> f64| -> Vec<f64> {
        runs.iter()
            .filter_map(|r| r.final_record().map(f))
            .collect()
    };
    let residuals = last(|r| r.comp_residual);
    let residual_ratios = residuals.windows(2).map(|w| w[1] / w[0]).collect();
    let excess = last(|r| r.excess);
    let p_times_onemrho = last(|r| r.p_times_onemrho);
    let rho_gradp_defect = last(|r| r.rho_gradp_defect);
    let cauchy_frac = cauchy_matrix(&runs, |s| &s.0);
    let cauchy_pressure = cauchy_matrix(&runs, |s| &s.1);
    SweepReport {
        config,
        runs,
        residuals,
        residual_ratios,
        excess,
        p_times_onemrho,
        rho_gradp_defect,
        cauchy_frac,
        cauchy_pressure,
    }
}

/// `D(m, m') = ( ∫₀ᵀ ∫ |∇(q_m - q_m')|² )^(1/2)` by the trapezoid rule over
/// the shared sampling times.
fn cauchy_matrix(
    runs: &[MRun],
    pick: impl Fn(&(ScalarField, ScalarField)) -> &ScalarField,
) -> Vec<Vec<f64>> {
    let k = runs.len();
    let mut d = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in (a + 1)..k {
            let times: Vec<f64> = runs[a].records.iter().map(|r| r.t).collect();
            let values: Vec<f64> = runs[a]
                .trajectory
                .iter()
                .zip(&runs[b].trajectory)
                .map(|(x, y)| {
                    let diff = pick(x).zip_map(pick(y), |u, v| u - v);
                    integrate(&gradient_energy_density(&diff))
                })
                .collect();
            let dist = trapezoid(&times, &values).max(0.0).sqrt();
            d[a][b] = dist;
            d[b][a] = dist;
        }
    }
    d
}
