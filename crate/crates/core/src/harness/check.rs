//! Operator and identity checks behind the `check` subcommand.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::Result;
use crate::grid::{
    divergence, face_divergence, face_gradient, gradient, inner, inner_vec, integrate, laplacian,
    GridSpec, ScalarField, VectorField,
};
use crate::potential::solve_newtonian;

use super::refine::fund1_study;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

fn at_most(name: &'static str, value: f64, threshold: f64) -> CheckResult {
    CheckResult {
        name,
        value,
        threshold,
        passed: value <= threshold,
    }
}

fn at_least(name: &'static str, value: f64, threshold: f64) -> CheckResult {
    CheckResult {
        name,
        value,
        threshold,
        passed: value >= threshold,
    }
}

fn gaussian(grid: GridSpec, a: f64) -> Result<ScalarField> {
    ScalarField::from_fn(grid, |x| (-a * x.iter().map(|v| v * v).sum::<f64>()).exp())
}

/// Cells away from the outer `layers` layers.
fn interior(grid: &GridSpec, layers: usize) -> impl Iterator<Item = usize> + '_ {
    (0..grid.len()).filter(move |&i| !grid.in_outer_layer(i, layers))
}

fn max_interior_error(f: &ScalarField, exact: impl Fn(&[f64]) -> f64) -> f64 {
    let g = f.grid();
    interior(g, 1)
        .map(|i| (f.values()[i] - exact(&g.coords(i)[..g.dim()])).abs())
        .fold(0.0, f64::max)
}

/// Smooth field vanishing on the outer two layers of `[-L, L]^n`.
fn compact(grid: GridSpec, shift: f64) -> Result<ScalarField> {
    let reach = grid.half_width() - 3.0 * grid.spacing();
    ScalarField::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum::<f64>() / (reach * reach);
        (1.0 - r2).max(0.0).powi(4) * (1.0 + shift * x[0])
    })
}

fn adjointness() -> Result<CheckResult> {
    let g = GridSpec::new(2, 1.0, 32)?;
    let f = compact(g, 0.7)?;
    let v = VectorField::from_components(vec![compact(g, -0.3)?, compact(g, 1.1)?])?;
    let lhs = inner(&f, &divergence(&v));
    let rhs = -inner_vec(&gradient(&f), &v);
    Ok(at_most("adjointness", (lhs - rhs).abs(), 1e-12))
}

fn polynomial_exactness() -> Result<CheckResult> {
    let g = GridSpec::new(3, 1.0, 8)?;
    let mut err: f64 = 0.0;
    let linear = ScalarField::from_fn(g, |x| 2.5 * x[0])?;
    let grad = gradient(&linear);
    err = err.max(max_interior_error(grad.component(0), |_| 2.5));
    err = err.max(max_interior_error(grad.component(1), |_| 0.0));
    let id = VectorField::from_components(
        (0..3)
            .map(|a| ScalarField::from_fn(g, |x| x[a]))
            .collect::<Result<_>>()?,
    )?;
    err = err.max(max_interior_error(&divergence(&id), |_| 3.0));
    let quad = ScalarField::from_fn(g, |x| x.iter().map(|v| v * v).sum())?;
    err = err.max(max_interior_error(&laplacian(&quad), |_| 6.0));
    err = err.max((integrate(&ScalarField::constant(g, 1.0)) - 8.0).abs());
    Ok(at_most("polynomial_exactness", err, 1e-12))
}

fn composition() -> Result<CheckResult> {
    let g = GridSpec::new(2, 2.0, 24)?;
    let f = gaussian(g, 1.3)?;
    let a = laplacian(&f);
    let b = face_divergence(&face_gradient(&f));
    let diff = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(at_most("laplacian_composition", diff, 0.0))
}

fn refinement_ratio(
    name: &'static str,
    error: impl Fn(usize) -> Result<f64>,
) -> Result<CheckResult> {
    Ok(at_least(name, error(32)? / error(64)?, 3.5))
}

fn gradient_order() -> Result<CheckResult> {
    refinement_ratio("gradient_refinement_ratio", |n| {
        let g = GridSpec::new(2, 3.0, n)?;
        let grad = gradient(&gaussian(g, 1.0)?);
        Ok(max_interior_error(grad.component(0), |x| {
            -2.0 * x[0] * (-(x[0] * x[0] + x[1] * x[1])).exp()
        }))
    })
}

fn laplacian_order() -> Result<CheckResult> {
    refinement_ratio("laplacian_refinement_ratio", |n| {
        let g = GridSpec::new(2, 3.0, n)?;
        let lap = laplacian(&gaussian(g, 1.0)?);
        Ok(max_interior_error(&lap, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            (4.0 * r2 - 4.0) * (-r2).exp()
        }))
    })
}

fn gaussian_integral() -> Result<CheckResult> {
    let g = GridSpec::new(2, 6.0, 128)?;
    Ok(at_most(
        "gaussian_integral",
        (integrate(&gaussian(g, 1.0)?) - PI).abs(),
        1e-6,
    ))
}

/// Relative `L²` defect of `Δφ + ρ` away from the boundary.
pub fn poisson_defect(cells: usize) -> Result<f64> {
    let g = GridSpec::new(2, 3.0, cells)?;
    let rho = gaussian(g, 4.0)?;
    let (phi, _) = solve_newtonian(&rho)?;
    let lap = laplacian(&phi);
    let (mut num, mut den) = (0.0, 0.0);
    for i in interior(&g, 1) {
        num += (lap.values()[i] + rho.values()[i]).powi(2);
        den += rho.values()[i].powi(2);
    }
    Ok((num / den).sqrt())
}

fn poisson_order() -> Result<CheckResult> {
    refinement_ratio("poisson_defect_ratio", poisson_defect)
}

fn linearity() -> Result<CheckResult> {
    let g = GridSpec::new(2, 2.0, 32)?;
    let r1 = gaussian(g, 3.0)?;
    let r2 = ScalarField::from_fn(g, |x| (1.0 - (x[0] - 0.4).powi(2) - x[1] * x[1]).max(0.0))?;
    let (a, b) = (0.7, 2.3);
    let (phi, _) = solve_newtonian(&r1.linear_combination(a, &r2, b)?)?;
    let (p1, _) = solve_newtonian(&r1)?;
    let (p2, _) = solve_newtonian(&r2)?;
    let sum = p1.linear_combination(a, &p2, b)?;
    let diff = phi
        .values()
        .iter()
        .zip(sum.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(at_most("poisson_linearity", diff / phi.max_abs(), 1e-12))
}

/// Largest relative deviation of `|∇φ|` from `M / (2π r)` outside a
/// radial bump of radius 1, at `N = 128`.
pub fn radial_field_error() -> Result<f64> {
    let g = GridSpec::new(2, 4.0, 128)?;
    let rho = ScalarField::from_fn(g, |x| (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0).powi(2))?;
    let mass = integrate(&rho);
    let (_, grad) = solve_newtonian(&rho)?;
    let mag = grad.magnitude();
    let mut worst: f64 = 0.0;
    for i in interior(&g, 2) {
        let x = g.coords(i);
        let r = x[0].hypot(x[1]);
        if r > 1.3 && r < 3.5 {
            let exact = mass / (2.0 * PI * r);
            worst = worst.max((mag.values()[i] - exact).abs() / exact);
        }
    }
    Ok(worst)
}

fn radial_field() -> Result<CheckResult> {
    Ok(at_most("radial_field", radial_field_error()?, 0.01))
}

fn mirror_symmetry() -> Result<CheckResult> {
    // Odd cell count so the origin is a cell center.
    let g = GridSpec::new(2, 3.0, 65)?;
    let bump = |x: &[f64], c: f64| (1.0 - (x[0] - c).powi(2) - x[1] * x[1]).max(0.0).powi(2);
    let rho = ScalarField::from_fn(g, |x| bump(x, 1.2) + bump(x, -1.2))?;
    let (_, grad) = solve_newtonian(&rho)?;
    let center = (g.len() - 1) / 2;
    let scale = grad.max_magnitude();
    let at_center = grad
        .components()
        .iter()
        .map(|c| c.values()[center].abs())
        .fold(0.0, f64::max);
    Ok(at_most("mirror_symmetry", at_center / scale, 1e-10))
}

fn potential_bound() -> Result<CheckResult> {
    let g = GridSpec::new(2, 3.0, 64)?;
    let rho = ScalarField::from_fn(g, |x| {
        0.8 * (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0).powi(3)
    })?;
    let (phi, _) = solve_newtonian(&rho)?;
    let lap = laplacian(&phi);
    let worst = interior(&g, 1)
        .map(|i| -lap.values()[i])
        .fold(f64::MIN, f64::max);
    Ok(at_most(
        "neg_laplacian_phi_over_max_rho",
        worst / rho.max(),
        1.0 + 1e-2,
    ))
}

fn fund1() -> Result<Vec<CheckResult>> {
    let study = fund1_study(2, &[64, 128])?;
    let order = (study[0].rel_err / study[1].rel_err).log2();
    Ok(vec![
        at_most("fund1_rel_err_128", study[1].rel_err, 1e-3),
        at_least("fund1_order", order, 1.5),
    ])
}

/// Runs the whole suite.
pub fn run_operator_suite() -> Result<Vec<CheckResult>> {
    let mut out = vec![
        adjointness()?,
        polynomial_exactness()?,
        composition()?,
        gradient_order()?,
        laplacian_order()?,
        gaussian_integral()?,
        poisson_order()?,
        linearity()?,
        radial_field()?,
        mirror_symmetry()?,
        potential_bound()?,
    ];
    out.extend(fund1()?);
    Ok(out)
}
