//! Chemotactic potential `φ` with `-Δφ = ρ` on all of space, and the drift
//! field `∇φ` that transports the density.

mod convolution;
mod green;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{gradient, GridSpec, ScalarField, VectorField, MAX_DIM};
use crate::model::check_density;

use convolution::FreeSpaceConvolver;

pub use green::{newtonian_cell_average, newtonian_kernel};

/// Background drift `∇φ₀(x)`.
pub type BackgroundFn = dyn Fn(&[f64]) -> [f64; MAX_DIM] + Send + Sync;
/// Vector kernel `K(x, y)` of the generalized drift `∇φ₀ + ∫ K(x, y) ρ(y) dy`.
pub type KernelFn = dyn Fn(&[f64], &[f64]) -> [f64; MAX_DIM] + Send + Sync;

/// A drift of the form `∇φ₀(x) + ∫ K(x, y) ρ(y) dy`, evaluated by direct
/// quadrature over the grid.
#[derive(Clone)]
pub struct CustomKernel {
    background: Arc<BackgroundFn>,
    kernel: Arc<KernelFn>,
}

impl CustomKernel {
    pub fn new(
        background: impl Fn(&[f64]) -> [f64; MAX_DIM] + Send + Sync + 'static,
        kernel: impl Fn(&[f64], &[f64]) -> [f64; MAX_DIM] + Send + Sync + 'static,
    ) -> Self {
        Self {
            background: Arc::new(background),
            kernel: Arc::new(kernel),
        }
    }
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomKernel { .. }")
    }
}

/// How the drift `∇φ` is obtained from the density.
#[derive(Clone, Debug, Default)]
pub enum DriftKernel {
    #[default]
    Off,
    /// `φ = 𝒩 ⋆ ρ`, the attractive Newtonian potential (n = 2, 3).
    Newtonian,
    CustomSmooth(CustomKernel),
}

impl DriftKernel {
    pub fn name(&self) -> &'static str {
        match self {
            DriftKernel::Off => "off",
            DriftKernel::Newtonian => "newtonian",
            DriftKernel::CustomSmooth(_) => "custom",
        }
    }

    pub fn validate_for(&self, grid: &GridSpec) -> Result<()> {
        match self {
            DriftKernel::Newtonian if !(2..=3).contains(&grid.dim()) => {
                Err(Error::DimensionUnsupported(grid.dim()))
            }
            _ => Ok(()),
        }
    }
}

/// Free-space Newtonian solver for a fixed grid. Construction computes the
/// kernel spectrum once; each solve costs one forward and one inverse
/// transform on the doubled grid.
pub struct NewtonianSolver {
    grid: GridSpec,
    convolver: FreeSpaceConvolver,
}

impl NewtonianSolver {
    pub fn new(grid: GridSpec) -> Result<Self> {
        if !(2..=3).contains(&grid.dim()) {
            return Err(Error::DimensionUnsupported(grid.dim()));
        }
        let h = grid.spacing();
        let dim = grid.dim();
        let volume = grid.cell_volume();
        let convolver = FreeSpaceConvolver::new(dim, grid.cells(), |offset| {
            if offset.iter().all(|&o| o == 0) {
                newtonian_cell_average(dim, h) * volume
            } else {
                let r = offset.iter().map(|&o| (o * o) as f64).sum::<f64>().sqrt() * h;
                newtonian_kernel(dim, r) * volume
            }
        });
        Ok(Self { grid, convolver })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Potential only.
    pub fn potential(&mut self, rho: &ScalarField) -> Result<ScalarField> {
        if *rho.grid() != self.grid {
            return Err(Error::InvalidGrid(
                "density grid differs from solver grid".into(),
            ));
        }
        check_density(rho)?;
        let mut phi = vec![0.0; self.grid.len()];
        self.convolver.apply(rho.values(), &mut phi);
        ScalarField::from_values(self.grid, phi)
    }

    /// Potential and its centered gradient.
    pub fn solve(&mut self, rho: &ScalarField) -> Result<(ScalarField, VectorField)> {
        let phi = self.potential(rho)?;
        let grad = gradient(&phi);
        Ok((phi, grad))
    }
}

/// One-shot free-space solve of `-Δφ = ρ`, returning `φ` and `∇φ`.
pub fn solve_newtonian(rho: &ScalarField) -> Result<(ScalarField, VectorField)> {
    NewtonianSolver::new(*rho.grid())?.solve(rho)
}

/// Drift field `∇φ` for the given kernel.
pub fn drift_field(rho: &ScalarField, kernel: &DriftKernel) -> Result<VectorField> {
    Ok(Arc::unwrap_or_clone(
        DriftSolver::new(kernel, *rho.grid())?
            .compute(rho)?
            .grad_phi,
    ))
}

/// Potential (when the kernel has one) and drift for one density. Shared
/// so that density-independent drifts are not reallocated every step.
#[derive(Clone, Debug)]
pub struct Drift {
    pub phi: Option<Arc<ScalarField>>,
    pub grad_phi: Arc<VectorField>,
}

/// Reusable drift evaluator owned by a single run.
pub struct DriftSolver {
    grid: GridSpec,
    inner: DriftInner,
}

enum DriftInner {
    Off(Drift),
    Newtonian(Box<NewtonianSolver>),
    Custom(CustomKernel),
}

impl DriftSolver {
    pub fn new(kernel: &DriftKernel, grid: GridSpec) -> Result<Self> {
        let inner = match kernel {
            DriftKernel::Off => DriftInner::Off(Drift {
                phi: Some(Arc::new(ScalarField::zeros(grid))),
                grad_phi: Arc::new(VectorField::zeros(grid)),
            }),
            DriftKernel::Newtonian => DriftInner::Newtonian(Box::new(NewtonianSolver::new(grid)?)),
            DriftKernel::CustomSmooth(k) => DriftInner::Custom(k.clone()),
        };
        Ok(Self { grid, inner })
    }

    pub fn compute(&mut self, rho: &ScalarField) -> Result<Drift> {
        if *rho.grid() != self.grid {
            return Err(Error::InvalidGrid(
                "density grid differs from drift grid".into(),
            ));
        }
        check_density(rho)?;
        match &mut self.inner {
            DriftInner::Off(zero) => Ok(zero.clone()),
            DriftInner::Newtonian(solver) => {
                let (phi, grad_phi) = solver.solve(rho)?;
                Ok(Drift {
                    phi: Some(Arc::new(phi)),
                    grad_phi: Arc::new(grad_phi),
                })
            }
            DriftInner::Custom(kernel) => Ok(Drift {
                phi: None,
                grad_phi: Arc::new(custom_drift(rho, kernel)?),
            }),
        }
    }
}

fn custom_drift(rho: &ScalarField, kernel: &CustomKernel) -> Result<VectorField> {
    let grid = *rho.grid();
    let dim = grid.dim();
    let volume = grid.cell_volume();
    let sources: Vec<(usize, f64)> = rho
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &r)| r != 0.0)
        .map(|(j, &r)| (j, r * volume))
        .collect();
    let mut comps = vec![vec![0.0; grid.len()]; dim];
    for i in 0..grid.len() {
        let x = grid.coords(i);
        let mut acc = (kernel.background)(&x[..dim]);
        for &(j, weight) in &sources {
            let y = grid.coords(j);
            let k = (kernel.kernel)(&x[..dim], &y[..dim]);
            for a in 0..dim {
                acc[a] += k[a] * weight;
            }
        }
        if acc[..dim].iter().any(|v| !v.is_finite()) {
            return Err(Error::KernelUnbounded { index: i });
        }
        for a in 0..dim {
            comps[a][i] = acc[a];
        }
    }
    VectorField::from_components(
        comps
            .into_iter()
            .map(|c| ScalarField::from_values(grid, c))
            .collect::<Result<_>>()?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::laplacian;

    #[test]
    fn zero_density_gives_zero_potential() {
        let g = GridSpec::new(2, 2.0, 16).unwrap();
        let (phi, grad) = solve_newtonian(&ScalarField::zeros(g)).unwrap();
        assert_eq!(phi.max_abs(), 0.0);
        assert_eq!(grad.max_magnitude(), 0.0);
    }

    #[test]
    fn one_dimension_is_unsupported() {
        let g = GridSpec::new(1, 2.0, 16).unwrap();
        assert!(matches!(
            solve_newtonian(&ScalarField::zeros(g)),
            Err(Error::DimensionUnsupported(1))
        ));
        assert!(DriftKernel::Newtonian.validate_for(&g).is_err());
        assert!(DriftKernel::Off.validate_for(&g).is_ok());
    }

    #[test]
    fn negative_density_is_rejected() {
        let g = GridSpec::new(2, 2.0, 8).unwrap();
        let mut v = vec![0.0; g.len()];
        v[10] = -1e-9;
        let rho = ScalarField::from_values(g, v).unwrap();
        assert!(matches!(
            solve_newtonian(&rho),
            Err(Error::NegativeDensity { index: 10, .. })
        ));
    }

    #[test]
    fn potential_inverts_laplacian_in_3d() {
        let g = GridSpec::new(3, 3.0, 32).unwrap();
        let rho = ScalarField::from_fn(g, |x| (-4.0 * x.iter().map(|v| v * v).sum::<f64>()).exp())
            .unwrap();
        let (phi, _) = solve_newtonian(&rho).unwrap();
        let lap = laplacian(&phi);
        let mut defect = 0.0;
        let mut norm = 0.0;
        for i in 0..g.len() {
            if !g.in_outer_layer(i, 1) {
                defect += (lap.values()[i] + rho.values()[i]).powi(2);
                norm += rho.values()[i].powi(2);
            }
        }
        assert!((defect / norm).sqrt() < 0.05, "{}", (defect / norm).sqrt());
    }

    #[test]
    fn off_kernel_gives_zero_drift() {
        let g = GridSpec::new(2, 2.0, 8).unwrap();
        let rho = ScalarField::constant(g, 0.3);
        assert_eq!(
            drift_field(&rho, &DriftKernel::Off)
                .unwrap()
                .max_magnitude(),
            0.0
        );
    }

    #[test]
    fn custom_background_only() {
        let g = GridSpec::new(2, 1.0, 8).unwrap();
        let rho = ScalarField::from_fn(g, |x| (1.0 - x[0] * x[0]).max(0.0)).unwrap();
        let kernel =
            DriftKernel::CustomSmooth(CustomKernel::new(|_| [1.0, 0.0, 0.0], |_, _| [0.0; 3]));
        let v = drift_field(&rho, &kernel).unwrap();
        assert!(v.component(0).values().iter().all(|&c| c == 1.0));
        assert!(v.component(1).values().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn custom_kernel_must_be_finite() {
        let g = GridSpec::new(2, 1.0, 8).unwrap();
        let rho = ScalarField::constant(g, 0.5);
        let kernel = DriftKernel::CustomSmooth(CustomKernel::new(
            |_| [0.0; 3],
            |x, y| [1.0 / (x[0] - y[0]), 0.0, 0.0],
        ));
        assert!(matches!(
            drift_field(&rho, &kernel),
            Err(Error::KernelUnbounded { .. })
        ));
    }
}
