//! Explicit conservative finite-volume integration of
//!
//! ```text
//! ∂t ρ = Δ( m/(m+1) ρ^(m+1) ) - div(ρ ∇φ) + ρ G(p),   p = ρ^m
//! ```
//!
//! Diffusion is a direct face difference of `ρ^(m+1)`, drift is donor-cell
//! upwinding of `ρ` with face-averaged `∇φ`, growth is a pointwise source.
//! Fluxes through the outer faces of the box are zero, so the discrete mass
//! changes only through the growth term.

use std::sync::Arc;

use crate::diagnostics::{apriori_functionals, DiagnosticsRecord, DEFAULT_L4_ALPHA};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField};
use crate::model::{check_density, power, ModelParams, NEGATIVE_TOLERANCE};
use crate::potential::DriftSolver;

pub const DEFAULT_CFL: f64 = 0.4;
/// Keeps the time-step formula finite on empty fields.
pub const DT_GUARD: f64 = 1e-30;
/// Densities below this are flushed to zero after each step.
pub const FLUSH_BELOW: f64 = 1e-300;

/// Snapshot of one trajectory at time `t`, with the pressure and drift
/// that belong to `rho`.
#[derive(Clone, Debug)]
pub struct SimState {
    t: f64,
    rho: ScalarField,
    params: Arc<ModelParams>,
    phi: Option<Arc<ScalarField>>,
    grad_phi: Arc<VectorField>,
    pressure: ScalarField,
    step_count: u64,
    rate_pressure: f64,
    sup_pressure: f64,
    max_drift: f64,
}

impl SimState {
    /// Builds a state at time `t`, solving for the drift.
    pub fn new(rho: ScalarField, params: Arc<ModelParams>, t: f64) -> Result<Self> {
        let mut drift = DriftSolver::new(params.kernel(), *params.grid())?;
        Self::with_solver(rho, params, t, &mut drift)
    }

    fn with_solver(
        rho: ScalarField,
        params: Arc<ModelParams>,
        t: f64,
        drift: &mut DriftSolver,
    ) -> Result<Self> {
        if *rho.grid() != *params.grid() {
            return Err(Error::InvalidGrid(
                "density grid differs from model grid".into(),
            ));
        }
        check_density(&rho)?;
        let rho = rho.map(|v| if v < FLUSH_BELOW { 0.0 } else { v });
        let m = params.exponent();
        let pressure = rho.map(|r| power(r, m));
        check_pressure(&pressure, 0)?;
        let d = drift.compute(&rho)?;
        Ok(Self {
            t,
            rho,
            params,
            sup_pressure: pressure.max(),
            max_drift: d.grad_phi.max_magnitude(),
            phi: d.phi,
            grad_phi: d.grad_phi,
            pressure,
            step_count: 0,
            rate_pressure: 0.0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn density(&self) -> &ScalarField {
        &self.rho
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn potential(&self) -> Option<&ScalarField> {
        self.phi.as_deref()
    }

    pub fn drift(&self) -> &VectorField {
        &self.grad_phi
    }

    pub fn pressure(&self) -> &ScalarField {
        &self.pressure
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// `∫ (∂t ρ) p` over the step that produced this state (0 initially).
    pub fn rate_pressure(&self) -> f64 {
        self.rate_pressure
    }
}

/// Largest step for which the scheme is stable and positivity preserving,
/// with the default Courant factor.
pub fn stable_dt(state: &SimState) -> f64 {
    stable_dt_with(state, DEFAULT_CFL)
}

/// `C · min( h² / (2n (m+1) max p + ε), h / (max|∇φ| + ε), 1 / (G_M + ε) )`.
pub fn stable_dt_with(state: &SimState, cfl: f64) -> f64 {
    let grid = state.rho.grid();
    let h = grid.spacing();
    let dim = grid.dim() as f64;
    let m = state.params.exponent();
    let diffusion = h * h / (2.0 * dim * (m + 1.0) * state.sup_pressure + DT_GUARD);
    let drift = h / (state.max_drift + DT_GUARD);
    let growth = 1.0 / (state.params.growth().max_rate() + DT_GUARD);
    cfl * diffusion.min(drift).min(growth)
}

/// Advances [`SimState`]s of one run; owns the drift solver's workspace.
pub struct Stepper {
    params: Arc<ModelParams>,
    drift: DriftSolver,
    cfl: f64,
    flux_potential: Vec<f64>,
    face_flux: Vec<f64>,
    inflow: Vec<f64>,
}

impl Stepper {
    pub fn new(params: ModelParams) -> Result<Self> {
        let drift = DriftSolver::new(params.kernel(), *params.grid())?;
        let cells = params.grid().len();
        Ok(Self {
            params: Arc::new(params),
            drift,
            cfl: DEFAULT_CFL,
            flux_potential: vec![0.0; cells],
            face_flux: vec![0.0; cells],
            inflow: vec![0.0; cells],
        })
    }

    pub fn with_cfl(mut self, cfl: f64) -> Result<Self> {
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Courant factor must lie in (0, 1], got {cfl}"
            )));
        }
        self.cfl = cfl;
        Ok(self)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn cfl(&self) -> f64 {
        self.cfl
    }

    pub fn initialize(&mut self, rho: ScalarField) -> Result<SimState> {
        self.initialize_at(rho, 0.0)
    }

    pub fn initialize_at(&mut self, rho: ScalarField, t: f64) -> Result<SimState> {
        SimState::with_solver(rho, Arc::clone(&self.params), t, &mut self.drift)
    }

    pub fn stable_dt(&self, state: &SimState) -> f64 {
        stable_dt_with(state, self.cfl)
    }

    /// One forward-Euler step of length `dt`.
    pub fn step(&mut self, state: &SimState, dt: f64) -> Result<SimState> {
        let stable = self.stable_dt(state);
        if !(dt >= 0.0 && dt <= stable * (1.0 + 1e-12)) {
            return Err(Error::CflViolation { dt, stable });
        }
        let grid = *state.rho.grid();
        let inv_h = 1.0 / grid.spacing();
        let m = self.params.exponent();
        let growth = *self.params.growth();
        let rho = state.rho.values();
        let p = state.pressure.values();
        let coeff = m / (m + 1.0);
        let u = &mut self.flux_potential;
        for ((u, &r), &p) in u.iter_mut().zip(rho).zip(p) {
            *u = coeff * r * p;
        }

        let inflow = &mut self.inflow;
        accumulate_inflow(
            &grid,
            rho,
            u,
            &state.grad_phi,
            inv_h,
            &mut self.face_flux,
            inflow,
        );

        let step = state.step_count + 1;
        let mut next: Vec<f64> = rho
            .iter()
            .zip(p)
            .zip(inflow.iter())
            .map(|((&r, &p), &q)| r + dt * (q * inv_h + r * growth.eval(p)))
            .collect();
        let low = next.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        if low < -NEGATIVE_TOLERANCE || !next.iter().all(|v| v.is_finite()) {
            for (i, &r) in next.iter().enumerate() {
                if !r.is_finite() {
                    return Err(Error::NonFiniteField { step, index: i });
                }
                if r < -NEGATIVE_TOLERANCE {
                    return Err(Error::PositivityLoss {
                        step,
                        index: i,
                        value: r,
                    });
                }
            }
        }
        for r in &mut next {
            if *r < FLUSH_BELOW {
                *r = 0.0;
            }
        }

        let rate_pressure = if dt > 0.0 {
            next.iter()
                .zip(state.rho.values())
                .zip(state.pressure.values())
                .map(|((&r, &r0), &p)| (r - r0) * p)
                .sum::<f64>()
                / dt
        } else {
            0.0
        };
        let rho_next = ScalarField::from_raw(grid, next);
        let pressure = rho_next.map(|r| power(r, m));
        check_pressure(&pressure, step)?;
        let d = self.drift.compute(&rho_next)?;
        Ok(SimState {
            t: state.t + dt,
            rho: rho_next,
            params: Arc::clone(&self.params),
            sup_pressure: pressure.max(),
            max_drift: d.grad_phi.max_magnitude(),
            phi: d.phi,
            grad_phi: d.grad_phi,
            pressure,
            step_count: step,
            rate_pressure: rate_pressure * grid.cell_volume(),
        })
    }

    /// Integrates from `init` at `t = 0` to `options.final_time`, stopping
    /// exactly at every sampling and snapshot time.
    ///
    /// `observer` sees each stop; `record` is set at sampling times.
    pub fn run(
        &mut self,
        init: ScalarField,
        options: &RunOptions,
        mut observer: impl FnMut(&Observation<'_>) -> Result<()>,
    ) -> Result<RunSummary> {
        options.validate()?;
        check_initial_data(&init, &self.params)?;
        let mut state = self.initialize(init)?;
        let samples = options.sample_times();
        let stops = stop_times(&samples, &options.snapshot_times, options.final_time);

        let mut records = Vec::with_capacity(samples.len());
        let mut max_sup_p = state.sup_pressure;
        let mut next_sample = 0;
        for &stop in &stops {
            while state.t < stop {
                let remaining = stop - state.t;
                let stable = self.stable_dt(&state);
                let (dt, lands) = if stable >= remaining {
                    (remaining, true)
                } else {
                    (stable, false)
                };
                let mut next = self.step(&state, dt)?;
                if lands {
                    next.t = stop;
                }
                max_sup_p = max_sup_p.max(next.sup_pressure);
                state = next;
            }
            let is_sample = next_sample < samples.len() && samples[next_sample] == stop;
            let record = if is_sample {
                next_sample += 1;
                let r = apriori_functionals(&state, options.l4_alpha)?;
                records.push(r.clone());
                Some(r)
            } else {
                None
            };
            let snapshot = options.snapshot_times.contains(&stop);
            observer(&Observation {
                state: &state,
                record: record.as_ref(),
                sample_index: is_sample.then(|| next_sample - 1),
                snapshot,
            })?;
        }
        Ok(RunSummary {
            steps: state.step_count,
            final_state: state,
            records,
            max_sup_p,
        })
    }
}

/// Net inflow per cell from diffusive and upwinded drift fluxes through
/// interior faces; boundary faces carry no flux.
///
/// Along an axis with stride `s`, each contiguous block of `N s` cells holds
/// the face pairs `(i, i + s)` for `i` in the first `(N - 1) s` cells, so
/// fluxes are computed on whole slices and then scattered in two passes.
fn accumulate_inflow(
    grid: &GridSpec,
    rho: &[f64],
    u: &[f64],
    grad_phi: &VectorField,
    inv_h: f64,
    flux: &mut [f64],
    inflow: &mut [f64],
) {
    let n = grid.cells();
    inflow.iter_mut().for_each(|v| *v = 0.0);
    for axis in 0..grid.dim() {
        let g = grid_values(grad_phi, axis);
        let s = grid.stride(axis);
        let len = (n - 1) * s;
        for lo in (0..grid.len()).step_by(n * s) {
            let hi = lo + s;
            let flux = &mut flux[..len];
            let lower = rho[lo..lo + len]
                .iter()
                .zip(&u[lo..lo + len])
                .zip(&g[lo..lo + len]);
            let upper = rho[hi..hi + len]
                .iter()
                .zip(&u[hi..hi + len])
                .zip(&g[hi..hi + len]);
            for (f, (((&rl, &ul), &gl), ((&rh, &uh), &gh))) in flux.iter_mut().zip(lower.zip(upper))
            {
                let v = 0.5 * (gl + gh);
                let advective = if v > 0.0 { v * rl } else { v * rh };
                *f = (ul - uh) * inv_h + advective;
            }
            for (a, f) in inflow[lo..lo + len].iter_mut().zip(flux.iter()) {
                *a -= f;
            }
            for (a, f) in inflow[hi..hi + len].iter_mut().zip(flux.iter()) {
                *a += f;
            }
        }
    }
}

fn grid_values(v: &VectorField, axis: usize) -> &[f64] {
    v.component(axis).values()
}

/// `ρ^m` overflows long before `ρ` does at large `m`.
fn check_pressure(p: &ScalarField, step: u64) -> Result<()> {
    match p.values().iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFiniteField { step, index }),
        None => Ok(()),
    }
}

fn check_initial_data(init: &ScalarField, params: &ModelParams) -> Result<()> {
    check_density(init)?;
    if let Some(ceiling) = params.pressure_ceiling() {
        let p0 = power(init.max().max(0.0), params.exponent());
        if p0 > ceiling {
            return Err(Error::InvalidParameter(format!(
                "initial pressure {p0} exceeds the ceiling {ceiling}"
            )));
        }
    }
    Ok(())
}

fn stop_times(samples: &[f64], snapshots: &[f64], final_time: f64) -> Vec<f64> {
    let mut stops: Vec<f64> = samples
        .iter()
        .chain(snapshots)
        .copied()
        .filter(|&t| (0.0..=final_time).contains(&t))
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    stops
}

/// Scheduling of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub final_time: f64,
    /// Number of diagnostic samples, evenly spaced on `[0, T]` including
    /// both ends (a single sample when `T = 0`).
    pub samples: usize,
    /// Extra stops at which the observer is asked for a snapshot.
    pub snapshot_times: Vec<f64>,
    pub l4_alpha: f64,
}

impl RunOptions {
    pub fn new(final_time: f64, samples: usize) -> Self {
        Self {
            final_time,
            samples,
            snapshot_times: Vec::new(),
            l4_alpha: DEFAULT_L4_ALPHA,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.final_time.is_finite() && self.final_time >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "final time must be finite and >= 0, got {}",
                self.final_time
            )));
        }
        if self.samples < 2 && self.final_time > 0.0 {
            return Err(Error::InvalidParameter(
                "need at least two samples for a positive final time".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.l4_alpha) {
            return Err(Error::InvalidParameter(format!(
                "l4 exponent must lie in [0, 1), got {}",
                self.l4_alpha
            )));
        }
        Ok(())
    }

    pub fn sample_times(&self) -> Vec<f64> {
        if self.final_time == 0.0 || self.samples < 2 {
            return vec![0.0];
        }
        let last = (self.samples - 1) as f64;
        (0..self.samples)
            .map(|k| {
                if k == self.samples - 1 {
                    self.final_time
                } else {
                    self.final_time * k as f64 / last
                }
            })
            .collect()
    }
}

/// What the observer sees at a stop.
pub struct Observation<'a> {
    pub state: &'a SimState,
    pub record: Option<&'a DiagnosticsRecord>,
    pub sample_index: Option<usize>,
    pub snapshot: bool,
}

/// Result of [`Stepper::run`].
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub final_state: SimState,
    pub records: Vec<DiagnosticsRecord>,
    pub steps: u64,
    /// Largest pressure seen after any step.
    pub max_sup_p: f64,
}
