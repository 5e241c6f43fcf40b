//! Closed-form Barenblatt source solutions of `∂τ ρ = Δ ρ^μ`.
//!
//! The simulated equation without drift or growth is
//! `∂t ρ = m/(m+1) Δ ρ^(m+1)`, i.e. `μ = m + 1` with `τ = m/(m+1) · t`.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Barenblatt {
    dim: usize,
    mu: f64,
    constant: f64,
    alpha: f64,
    beta: f64,
    kappa: f64,
}

impl Barenblatt {
    /// Profile for pressure exponent `m` (diffusion exponent `m + 1`) with
    /// free constant `C > 0`.
    pub fn new(dim: usize, exponent: f64, constant: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::DimensionUnsupported(dim));
        }
        if !(exponent > 0.0 && exponent.is_finite() && constant > 0.0 && constant.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Barenblatt needs m > 0 and C > 0, got m = {exponent}, C = {constant}"
            )));
        }
        let mu = exponent + 1.0;
        let n = dim as f64;
        let alpha = n / (n * (mu - 1.0) + 2.0);
        let beta = alpha / n;
        let kappa = alpha * (mu - 1.0) / (2.0 * mu * n);
        Ok(Self {
            dim,
            mu,
            constant,
            alpha,
            beta,
            kappa,
        })
    }

    /// Self-similar time `τ` reached after simulated time `t` from `tau0`.
    pub fn tau(&self, tau0: f64, t: f64) -> f64 {
        let m = self.mu - 1.0;
        tau0 + m / (m + 1.0) * t
    }

    pub fn density(&self, x: &[f64], tau: f64) -> f64 {
        let r2: f64 = x[..self.dim].iter().map(|v| v * v).sum();
        let inner = self.constant - self.kappa * r2 * tau.powf(-2.0 * self.beta);
        if inner <= 0.0 {
            return 0.0;
        }
        tau.powf(-self.alpha) * inner.powf(1.0 / (self.mu - 1.0))
    }

    /// Radius of the support at `τ`.
    pub fn front(&self, tau: f64) -> f64 {
        (self.constant / self.kappa).sqrt() * tau.powf(self.beta)
    }

    /// Cell averages from `sub` midpoint samples per axis.
    pub fn cell_averages(&self, grid: GridSpec, tau: f64, sub: usize) -> Result<ScalarField> {
        if grid.dim() != self.dim {
            return Err(Error::InvalidGrid("dimension differs from profile".into()));
        }
        let h = grid.spacing();
        let sub = sub.max(1);
        let offsets: Vec<f64> = (0..sub)
            .map(|k| ((k as f64 + 0.5) / sub as f64 - 0.5) * h)
            .collect();
        let count = sub.pow(self.dim as u32);
        ScalarField::from_fn(grid, |x| {
            let mut sum = 0.0;
            let mut y = [0.0; 3];
            for k in 0..count {
                let mut rest = k;
                for a in 0..self.dim {
                    y[a] = x[a] + offsets[rest % sub];
                    rest /= sub;
                }
                sum += self.density(&y, tau);
            }
            sum / count as f64
        })
    }

    /// Cell averages accurate enough to serve as a reference: the front
    /// behaves like a fractional power, so midpoint sampling converges
    /// slowly there.
    pub fn reference_averages(&self, grid: GridSpec, tau: f64) -> Result<ScalarField> {
        let sub = match self.dim {
            1 => 256,
            2 => 24,
            _ => 6,
        };
        self.cell_averages(grid, tau, sub)
    }

    /// `∫ |ρ_h - ρ(τ)|` against reference cell averages of the profile.
    pub fn l1_error(&self, field: &ScalarField, tau: f64) -> Result<f64> {
        let exact = self.reference_averages(*field.grid(), tau)?;
        let sum: f64 = field
            .values()
            .iter()
            .zip(exact.values())
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok(sum * field.grid().cell_volume())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::integrate;

    #[test]
    fn mass_is_conserved_in_tau() {
        let b = Barenblatt::new(2, 2.0, 0.1).unwrap();
        let g = GridSpec::new(2, 1.5, 256).unwrap();
        let m1 = integrate(&b.cell_averages(g, 0.03, 2).unwrap());
        let m2 = integrate(&b.cell_averages(g, 0.2, 2).unwrap());
        assert!((m1 - m2).abs() < 1e-3 * m1);
    }

    #[test]
    fn satisfies_equation_inside_support() {
        // Finite-difference residual of ∂τ ρ - Δ ρ^μ at an interior point, 1D.
        let b = Barenblatt::new(1, 2.0, 0.1).unwrap();
        let (x, tau, e) = (0.05, 0.1, 1e-4);
        let dt = (b.density(&[x], tau + e) - b.density(&[x], tau - e)) / (2.0 * e);
        let u = |y: f64| b.density(&[y], tau).powf(3.0);
        let lap = (u(x + e) - 2.0 * u(x) + u(x - e)) / (e * e);
        assert!((dt - lap).abs() < 1e-4 * dt.abs().max(1.0), "{dt} {lap}");
    }

    #[test]
    fn vanishes_beyond_front() {
        let b = Barenblatt::new(2, 3.0, 0.2).unwrap();
        let r = b.front(0.1);
        assert_eq!(b.density(&[r * 1.001, 0.0], 0.1), 0.0);
        assert!(b.density(&[r * 0.999, 0.0], 0.1) > 0.0);
    }
}
