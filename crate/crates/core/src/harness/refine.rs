//! Grid refinement studies: exact-solution errors, self-convergence, and the
//! order of the discrete `∫|∇p|²Δp` identity.

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{identity_check_fund1, Fund1Check};
use crate::error::{Error, Result};
use crate::grid::{integrate, restrict, GridSpec, ScalarField};
use crate::model::power;
use crate::stepper::{RunOptions, Stepper};

use super::config::RunConfig;

/// Box half-width for the Gaussian identity check.
pub const GAUSSIAN_HALF_WIDTH: f64 = 6.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementRun {
    pub cells: usize,
    pub steps: u64,
    pub mass_initial: f64,
    pub mass_final: f64,
    /// `L¹` distance to the exact profile, for Barenblatt scenarios.
    pub exact_l1_error: Option<f64>,
    #[serde(skip)]
    pub final_density: ScalarField,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fund1Entry {
    pub cells: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinementReport {
    pub label: &'static str,
    pub m: f64,
    pub cells: Vec<usize>,
    pub runs: Vec<RefinementRun>,
    pub exact_orders: Vec<f64>,
    /// `L¹` distance between consecutive runs on the coarsest grid.
    pub self_rho_errors: Vec<f64>,
    pub self_rho_orders: Vec<f64>,
    pub self_p_errors: Vec<f64>,
    pub self_p_orders: Vec<f64>,
    pub fund1: Vec<Fund1Entry>,
    pub fund1_orders: Vec<f64>,
}

/// `log(e_k / e_{k+1}) / log(N_{k+1} / N_k)` for consecutive pairs.
pub fn observed_orders(cells: &[usize], errors: &[f64]) -> Vec<f64> {
    cells
        .windows(2)
        .zip(errors.windows(2))
        .map(|(n, e)| (e[0] / e[1]).ln() / (n[1] as f64 / n[0] as f64).ln())
        .collect()
}

/// Runs `config` at its first exponent on each cell count.
pub fn run_refinement_study(
    config: &RunConfig,
    cells: &[usize],
    threads: Option<usize>,
) -> Result<RefinementReport> {
    let mut probe = config.clone();
    probe.refine_cells = cells.to_vec();
    probe.validate()?;
    if cells.is_empty() {
        return Err(Error::ConfigInvalid(vec![
            "refine_cells: must not be empty".into(),
        ]));
    }
    let m = config.exponents[0];
    let run_all = || -> Result<Vec<RefinementRun>> {
        cells
            .par_iter()
            .map(|&n| refine_run(config, m, n))
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

    let exact: Option<Vec<f64>> = runs.iter().map(|r| r.exact_l1_error).collect();
    let exact_orders = exact
        .map(|e| observed_orders(cells, &e))
        .unwrap_or_default();

    let coarse = GridSpec::new(config.grid.dim, config.grid.half_width, cells[0])?;
    let mut rho_c = Vec::with_capacity(runs.len());
    let mut p_c = Vec::with_capacity(runs.len());
    for r in &runs {
        let p = r.final_density.map(|v| power(v, m));
        rho_c.push(restrict(&r.final_density, coarse)?);
        p_c.push(restrict(&p, coarse)?);
    }
    let l1 = |a: &ScalarField, b: &ScalarField| integrate(&a.zip_map(b, |x, y| (x - y).abs()));
    let self_rho_errors: Vec<f64> = rho_c.windows(2).map(|w| l1(&w[0], &w[1])).collect();
    let self_p_errors: Vec<f64> = p_c.windows(2).map(|w| l1(&w[0], &w[1])).collect();
    let pair_cells = &cells[..cells.len().saturating_sub(1)];

    let fund1 = if config.grid.dim >= 2 {
        fund1_study(config.grid.dim, cells)?
    } else {
        Vec::new()
    };
    let fund1_errors: Vec<f64> = fund1.iter().map(|f| f.rel_err).collect();

    Ok(RefinementReport {
        label: config.label(),
        m,
        cells: cells.to_vec(),
        exact_orders,
        self_rho_orders: observed_orders(pair_cells, &self_rho_errors),
        self_p_orders: observed_orders(pair_cells, &self_p_errors),
        self_rho_errors,
        self_p_errors,
        fund1_orders: observed_orders(cells, &fund1_errors),
        fund1,
        runs,
    })
}

fn refine_run(config: &RunConfig, m: f64, cells: usize) -> Result<RefinementRun> {
    let grid = GridSpec::new(config.grid.dim, config.grid.half_width, cells)?;
    let init = config.initial_density(grid, m)?;
    let mass_initial = integrate(&init);
    let mut stepper = Stepper::new(config.model_params(grid, m)?)?.with_cfl(config.cfl)?;
    let options = RunOptions {
        final_time: config.final_time,
        samples: 2,
        snapshot_times: Vec::new(),
        l4_alpha: config.l4_alpha,
    };
    let summary = stepper
        .run(init, &options, |_| Ok(()))
        .map_err(|e| Error::RunFailed {
            m,
            source: Box::new(e),
        })?;
    let rho = summary.final_state.density().clone();
    let exact_l1_error = match config.barenblatt(m) {
        Some((profile, tau0)) => {
            Some(profile.l1_error(&rho, profile.tau(tau0, config.final_time))?)
        }
        None => None,
    };
    Ok(RefinementRun {
        cells,
        steps: summary.steps,
        mass_initial,
        mass_final: integrate(&rho),
        exact_l1_error,
        final_density: rho,
    })
}

/// The identity check on `p = exp(-|x|²)` over `[-6, 6]^n` at each cell count.
pub fn fund1_study(dim: usize, cells: &[usize]) -> Result<Vec<Fund1Entry>> {
    cells
        .iter()
        .map(|&n| {
            let grid = GridSpec::new(dim, GAUSSIAN_HALF_WIDTH, n)?;
            let p = ScalarField::from_fn(grid, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp())?;
            let Fund1Check { lhs, rhs, rel_err } = identity_check_fund1(&p)?;
            Ok(Fund1Entry {
                cells: n,
                lhs,
                rhs,
                rel_err,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::presets;

    #[test]
    fn orders_of_exact_powers() {
        let o = observed_orders(&[32, 64, 128], &[1.0, 0.25, 0.0625]);
        assert!(o.iter().all(|v| (v - 2.0).abs() < 1e-12));
        assert!(observed_orders(&[32], &[1.0]).is_empty());
    }

    #[test]
    fn single_resolution_has_no_orders() {
        let mut c = presets::barenblatt_1d();
        c.final_time = 0.01;
        let r = run_refinement_study(&c, &[32], Some(1)).unwrap();
        assert_eq!(r.runs.len(), 1);
        assert!(r.exact_orders.is_empty());
        assert!(r.self_rho_orders.is_empty());
        assert!(r.self_rho_errors.is_empty());
        assert!(r.runs[0].exact_l1_error.is_some());
        assert_eq!(r.label, "out-of-paper");
    }

    #[test]
    fn rejects_non_multiples() {
        let c = presets::barenblatt_1d();
        assert!(matches!(
            run_refinement_study(&c, &[32, 48], Some(1)),
            Err(Error::ConfigInvalid(_))
        ));
    }
}
