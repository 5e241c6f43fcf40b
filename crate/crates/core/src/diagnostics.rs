//! Integral functionals, limit-relation proxies and identities evaluated on
//! simulation states. Everything here is a read-only function of its input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    divergence, gradient_energy_density, hessian, integrate, laplacian, ScalarField,
};
use crate::model::{pressure_powers, GrowthLaw};
use crate::potential::DriftKernel;
use crate::stepper::SimState;

/// Floor on `p` in the weighted `|∇p|⁴ / p^α` integrand.
pub const PRESSURE_FLOOR: f64 = 1e-12;
pub const DEFAULT_L4_ALPHA: f64 = 0.5;
/// Width of the boundary layer used for mass leakage and support checks.
pub const BOUNDARY_LAYERS: usize = 2;

/// One time-stamped row of monitored functionals. Field order is the CSV
/// column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub m: f64,
    pub mass: f64,
    pub p_int: f64,
    pub grad_p_sq: f64,
    pub grad_p_frac_sq: f64,
    pub grad_p_frac2_sq: f64,
    pub grad_p_half_sq: f64,
    pub rho_pow_int: f64,
    pub second_moment: f64,
    pub sup_rho: f64,
    pub sup_p: f64,
    pub excess: f64,
    pub p_times_onemrho: f64,
    pub rho_gradp_defect: f64,
    pub comp_residual: f64,
    pub comp_residual_discrete_phi: f64,
    pub comp_residual_typeset: f64,
    pub l4_alpha: f64,
    pub l4_value: f64,
    pub hess_energy: f64,
    pub stiff_energy: f64,
    pub boundary_mass: f64,
    pub grad_phi_l2: f64,
    pub grad_phi_l4: f64,
    pub grad_phi_linf: f64,
    pub dt_rho_p: f64,
    pub est1_lhs: f64,
    pub est1_rhs: f64,
}

impl DiagnosticsRecord {
    /// Column names in CSV order.
    pub const COLUMNS: [&'static str; 29] = [
        "t",
        "m",
        "mass",
        "p_int",
        "grad_p_sq",
        "grad_p_frac_sq",
        "grad_p_frac2_sq",
        "grad_p_half_sq",
        "rho_pow_int",
        "second_moment",
        "sup_rho",
        "sup_p",
        "excess",
        "p_times_onemrho",
        "rho_gradp_defect",
        "comp_residual",
        "comp_residual_discrete_phi",
        "comp_residual_typeset",
        "l4_alpha",
        "l4_value",
        "hess_energy",
        "stiff_energy",
        "boundary_mass",
        "grad_phi_l2",
        "grad_phi_l4",
        "grad_phi_linf",
        "dt_rho_p",
        "est1_lhs",
        "est1_rhs",
    ];
}

/// Forms of the complementarity residual `∫ |p (Δp + s + G)|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualForms {
    /// `s = ρ` for the Newtonian kernel (the default residual).
    pub exact_source: f64,
    /// `s = -Δφ` from the discrete potential.
    pub discrete_phi: f64,
    /// `∫ |p (Δp + s + Δ G(p))|`, with `G` inside the Laplacian.
    pub typeset: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitProxies {
    /// `sup (ρ - 1)₊`.
    pub excess: f64,
    /// `∫ p |1 - ρ|`.
    pub p_times_onemrho: f64,
    /// `∫ |(1 - ρ) ∇p|²`.
    pub rho_gradp_defect: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct L4Functionals {
    /// `∫ |∇p|⁴ / max(p, ε)^α` over cells with `p > ε`.
    pub l4_value: f64,
    /// `∫ p |D²p|²`.
    pub hess_energy: f64,
    /// `m ∫ p (Δp + ρ + G(p))²`.
    pub stiff_energy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fund1Check {
    /// `∫ |∇p|² Δp`.
    pub lhs: f64,
    /// `(2/3) ∫ p |D²p|² - (2/3) ∫ p (Δp)²`.
    pub rhs: f64,
    pub rel_err: f64,
}

/// `-Δφ` as seen by the residuals: `ρ` itself for the Newtonian kernel,
/// zero without drift, and `-div ∇φ` otherwise.
fn exact_source(state: &SimState) -> ScalarField {
    match state.params().kernel() {
        DriftKernel::Newtonian => state.density().clone(),
        DriftKernel::Off => ScalarField::zeros(*state.density().grid()),
        DriftKernel::CustomSmooth(_) => discrete_source(state),
    }
}

fn discrete_source(state: &SimState) -> ScalarField {
    match state.potential() {
        Some(phi) => laplacian(phi).map(|v| -v),
        None => divergence(state.drift()).map(|v| -v),
    }
}

/// Cellwise `Δp + s + G(p)`.
fn pressure_operator(
    p: &ScalarField,
    lap_p: &ScalarField,
    source: &ScalarField,
    law: &GrowthLaw,
) -> Vec<f64> {
    p.values()
        .iter()
        .zip(lap_p.values())
        .zip(source.values())
        .map(|((&p, &l), &s)| l + s + law.eval(p))
        .collect()
}

fn weighted_abs_integral(p: &ScalarField, values: &[f64]) -> f64 {
    let sum: f64 = p
        .values()
        .iter()
        .zip(values)
        .map(|(p, v)| (p * v).abs())
        .sum();
    sum * p.grid().cell_volume()
}

/// `R_m = ∫ |p (Δp - Δφ + G(p))|` with `-Δφ` replaced by `ρ`.
pub fn complementarity_residual(state: &SimState) -> f64 {
    let p = state.pressure();
    let lap_p = laplacian(p);
    let op = pressure_operator(p, &lap_p, &exact_source(state), state.params().growth());
    weighted_abs_integral(p, &op)
}

pub fn complementarity_residuals(state: &SimState) -> ResidualForms {
    let p = state.pressure();
    let law = state.params().growth();
    let lap_p = laplacian(p);
    let source = exact_source(state);
    let exact = pressure_operator(p, &lap_p, &source, law);
    let discrete = pressure_operator(p, &lap_p, &discrete_source(state), law);
    let lap_g = laplacian(&p.map(|v| law.eval(v)));
    let typeset: Vec<f64> = lap_p
        .values()
        .iter()
        .zip(source.values())
        .zip(lap_g.values())
        .map(|((l, s), g)| l + s + g)
        .collect();
    ResidualForms {
        exact_source: weighted_abs_integral(p, &exact),
        discrete_phi: weighted_abs_integral(p, &discrete),
        typeset: weighted_abs_integral(p, &typeset),
    }
}

pub fn limit_relation_proxies(state: &SimState) -> LimitProxies {
    let rho = state.density();
    let p = state.pressure();
    let energy = gradient_energy_density(p);
    let vol = rho.grid().cell_volume();
    let mut weighted = 0.0;
    let mut defect = 0.0;
    for ((&r, &p), &e) in rho.values().iter().zip(p.values()).zip(energy.values()) {
        weighted += p * (1.0 - r).abs();
        defect += (1.0 - r) * (1.0 - r) * e;
    }
    LimitProxies {
        excess: (rho.max() - 1.0).max(0.0),
        p_times_onemrho: weighted * vol,
        rho_gradp_defect: defect * vol,
    }
}

pub fn l4_functionals(state: &SimState, alpha: f64) -> Result<L4Functionals> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "l4 exponent must lie in [0, 1), got {alpha}"
        )));
    }
    let p = state.pressure();
    let lap_p = laplacian(p);
    let op = pressure_operator(p, &lap_p, &exact_source(state), state.params().growth());
    let vol = p.grid().cell_volume();
    let stiff: f64 = p.values().iter().zip(&op).map(|(p, r)| p * r * r).sum();
    Ok(L4Functionals {
        l4_value: weighted_l4(p, alpha),
        hess_energy: hessian_energy(p),
        stiff_energy: state.params().exponent() * stiff * vol,
    })
}

fn weighted_l4(p: &ScalarField, alpha: f64) -> f64 {
    let energy = gradient_energy_density(p);
    let sum: f64 = p
        .values()
        .iter()
        .zip(energy.values())
        .filter(|(&p, _)| p > PRESSURE_FLOOR)
        .map(|(&p, &e)| e * e / p.max(PRESSURE_FLOOR).powf(alpha))
        .sum();
    sum * p.grid().cell_volume()
}

/// `Σ_ab (∂_a ∂_b f)²` per cell.
fn hessian_norm_sq(f: &ScalarField) -> Vec<f64> {
    let hess = hessian(f);
    let mut out = vec![0.0; f.grid().len()];
    for row in &hess {
        for entry in row {
            for (o, v) in out.iter_mut().zip(entry.values()) {
                *o += v * v;
            }
        }
    }
    out
}

fn hessian_energy(p: &ScalarField) -> f64 {
    let h2 = hessian_norm_sq(p);
    let sum: f64 = p.values().iter().zip(&h2).map(|(p, h)| p * h).sum();
    sum * p.grid().cell_volume()
}

/// Both sides of `∫ |∇p|² Δp = (2/3) ∫ p |D²p|² - (2/3) ∫ p (Δp)²`.
pub fn identity_check_fund1(p: &ScalarField) -> Result<Fund1Check> {
    let grid = *p.grid();
    let scale = p.max_abs();
    let edge = (0..grid.len())
        .filter(|&i| grid.in_outer_layer(i, BOUNDARY_LAYERS))
        .map(|i| p.values()[i].abs())
        .fold(0.0, f64::max);
    if edge > 1e-10 * scale.max(f64::MIN_POSITIVE) && edge > 0.0 {
        return Err(Error::SupportTouchesBoundary { value: edge });
    }
    if p.min() < 0.0 {
        let index = p.values().iter().position(|&v| v < 0.0).unwrap_or(0);
        return Err(Error::NegativeDensity {
            index,
            value: p.values()[index],
        });
    }
    let lap = laplacian(p);
    let energy = gradient_energy_density(p);
    let h2 = hessian_norm_sq(p);
    let vol = grid.cell_volume();
    let mut lhs = 0.0;
    let mut hess_term = 0.0;
    let mut lap_term = 0.0;
    for i in 0..grid.len() {
        let (pv, l) = (p.values()[i], lap.values()[i]);
        lhs += energy.values()[i] * l;
        hess_term += pv * h2[i];
        lap_term += pv * l * l;
    }
    let lhs = lhs * vol;
    let rhs = 2.0 / 3.0 * (hess_term - lap_term) * vol;
    let denom = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    Ok(Fund1Check {
        lhs,
        rhs,
        rel_err: (lhs - rhs).abs() / denom,
    })
}

/// Full record for one state.
pub fn apriori_functionals(state: &SimState, l4_alpha: f64) -> Result<DiagnosticsRecord> {
    let rho = state.density();
    let grid = *rho.grid();
    let m = state.params().exponent();
    let powers = pressure_powers(rho, m)?;
    let vol = grid.cell_volume();
    let energy = |f: &ScalarField| integrate(&gradient_energy_density(f));

    let mut second_moment = 0.0;
    let mut boundary_mass = 0.0;
    let mut rho_pow = 0.0;
    let mut est1 = 0.0;
    for (i, &r) in rho.values().iter().enumerate() {
        if r == 0.0 {
            continue;
        }
        let x = grid.coords(i);
        second_moment += x[..grid.dim()].iter().map(|c| c * c).sum::<f64>() * r;
        if grid.in_outer_layer(i, BOUNDARY_LAYERS) {
            boundary_mass += r;
        }
        let rm2 = powers.p_frac2.values()[i];
        rho_pow += rm2 * r * r * r;
        est1 += rm2 * r;
    }

    let proxies = limit_relation_proxies(state);
    let residuals = complementarity_residuals(state);
    let l4 = l4_functionals(state, l4_alpha)?;
    let grad_p_frac_sq = energy(&powers.p_frac);
    let drift = state.drift();
    let p = &powers.p;
    Ok(DiagnosticsRecord {
        t: state.time(),
        m,
        mass: integrate(rho),
        p_int: integrate(p),
        grad_p_sq: energy(p),
        grad_p_frac_sq,
        grad_p_frac2_sq: energy(&powers.p_frac2),
        grad_p_half_sq: energy(&powers.p_half),
        rho_pow_int: rho_pow * vol,
        second_moment: second_moment * vol,
        sup_rho: rho.max(),
        sup_p: p.max(),
        excess: proxies.excess,
        p_times_onemrho: proxies.p_times_onemrho,
        rho_gradp_defect: proxies.rho_gradp_defect,
        comp_residual: residuals.exact_source,
        comp_residual_discrete_phi: residuals.discrete_phi,
        comp_residual_typeset: residuals.typeset,
        l4_alpha,
        l4_value: l4.l4_value,
        hess_energy: l4.hess_energy,
        stiff_energy: l4.stiff_energy,
        boundary_mass: boundary_mass * vol,
        grad_phi_l2: drift.lq_norm(2.0),
        grad_phi_l4: drift.lq_norm(4.0),
        grad_phi_linf: drift.max_magnitude(),
        dt_rho_p: state.rate_pressure(),
        est1_lhs: est1 * vol,
        est1_rhs: 0.5 * grad_p_frac_sq,
    })
}

/// Trapezoid rule; a single sample integrates to zero.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Time integral of one column of a record series.
pub fn time_integral(
    records: &[DiagnosticsRecord],
    column: impl Fn(&DiagnosticsRecord) -> f64,
) -> f64 {
    let times: Vec<f64> = records.iter().map(|r| r.t).collect();
    let values: Vec<f64> = records.iter().map(column).collect();
    trapezoid(&times, &values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::model::ModelParams;
    use crate::stepper::SimState;
    use std::sync::Arc;

    fn state(rho: ScalarField, m: f64, growth: GrowthLaw, kernel: DriftKernel) -> SimState {
        let params = ModelParams::new(m, growth, kernel, *rho.grid(), None).unwrap();
        SimState::new(rho, Arc::new(params), 0.0).unwrap()
    }

    #[test]
    fn zero_density_gives_zero_functionals() {
        let g = GridSpec::new(2, 2.0, 16).unwrap();
        let law = GrowthLaw::smooth_tanh(4.0, 1.0).unwrap();
        let s = state(ScalarField::zeros(g), 8.0, law, DriftKernel::Newtonian);
        let r = apriori_functionals(&s, 0.5).unwrap();
        for v in [
            r.mass,
            r.p_int,
            r.grad_p_sq,
            r.grad_p_frac_sq,
            r.rho_pow_int,
            r.second_moment,
            r.sup_rho,
            r.comp_residual,
            r.comp_residual_typeset,
            r.l4_value,
            r.hess_energy,
            r.stiff_energy,
            r.p_times_onemrho,
        ] {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn patch_mass_and_exact_complementarity() {
        let g = GridSpec::new(2, 2.0, 32).unwrap();
        // 8 x 8 cells of side 1/8 inside [-0.5, 0.5]^2.
        let rho = ScalarField::from_fn(g, |x| {
            if x[0].abs() < 0.5 && x[1].abs() < 0.5 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let s = state(rho, 4.0, GrowthLaw::off(), DriftKernel::Off);
        let r = apriori_functionals(&s, 0.0).unwrap();
        assert!((r.mass - 1.0).abs() < 1e-14);
        assert_eq!(r.p_times_onemrho, 0.0);
        assert_eq!(r.excess, 0.0);
    }

    #[test]
    fn plateau_residual_vanishes_where_terms_cancel() {
        // ρ = 1 everywhere inside, p = 1 and G(1) = 0; with the Newtonian
        // source replaced by a background-only drift the source is zero.
        let g = GridSpec::new(2, 2.0, 32).unwrap();
        let rho = ScalarField::from_fn(g, |x| {
            if x[0].abs() < 1.0 && x[1].abs() < 1.0 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let law = GrowthLaw::smooth_tanh(4.0, 1.0).unwrap();
        let s = state(rho, 4.0, law, DriftKernel::Off);
        let p = s.pressure();
        let lap = laplacian(p);
        let op = pressure_operator(p, &lap, &exact_source(&s), &law);
        for i in 0..g.len() {
            let x = g.coords(i);
            if x[0].abs() < 0.8 && x[1].abs() < 0.8 {
                assert_eq!(p.values()[i] * op[i], 0.0);
            }
        }
    }

    #[test]
    fn l4_value_matches_gaussian_oracle() {
        // α = 0, p = exp(-|x|²): ∫ 16 |x|⁴ exp(-4|x|²) dx = π/2.
        let exact = std::f64::consts::FRAC_PI_2;
        let error = |cells| {
            let g = GridSpec::new(2, 6.0, cells).unwrap();
            let rho =
                ScalarField::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp()).unwrap();
            let s = state(rho, 2.0, GrowthLaw::off(), DriftKernel::Off);
            assert!(l4_functionals(&s, 1.0).is_err());
            (l4_functionals(&s, 0.0).unwrap().l4_value - exact).abs()
        };
        let (coarse, fine) = (error(128), error(256));
        assert!(fine < 5e-3 * exact, "{fine}");
        assert!(coarse / fine > 3.5, "{coarse} {fine}");
    }

    #[test]
    fn fund1_rejects_boundary_support_and_handles_zero() {
        let g = GridSpec::new(2, 2.0, 16).unwrap();
        assert!(matches!(
            identity_check_fund1(&ScalarField::constant(g, 1.0)),
            Err(Error::SupportTouchesBoundary { .. })
        ));
        let zero = identity_check_fund1(&ScalarField::zeros(g)).unwrap();
        assert_eq!((zero.lhs, zero.rhs, zero.rel_err), (0.0, 0.0, 0.0));
    }

    #[test]
    fn trapezoid_basics() {
        assert_eq!(trapezoid(&[0.0], &[5.0]), 0.0);
        assert_eq!(trapezoid(&[], &[]), 0.0);
        assert!((trapezoid(&[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0]) - 2.0).abs() < 1e-15);
    }
}
