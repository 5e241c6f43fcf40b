//! Uniform cell-centered grids on the box `[-L, L]^n` and the discrete
//! operators every other module is built from.
//!
//! Cell `i` along an axis has its center at `-L + (i + 1/2) h` with
//! `h = 2L / N`. Values are stored row-major: the last axis is contiguous.
//! Every operator treats the field as zero outside the box.
//!
//! Two derivative families are provided:
//!
//! * the cell-centered pair [`gradient`] / [`divergence`] (centered
//!   differences, face-averaged fluxes), which are exact negative adjoints
//!   of each other;
//! * the staggered pair [`face_gradient`] / [`face_divergence`], whose
//!   composition is the compact [`laplacian`] and whose squared face
//!   differences give [`gradient_energy_density`].

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

/// A uniform Cartesian grid on `[-L, L]^n`.
///
/// The spacing is always derived from the half-width and the cell count, so
/// `h * N == 2L` holds by construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    dim: usize,
    half_width: f64,
    cells: usize,
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, cells: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-width must be positive and finite, got {half_width}"
            )));
        }
        if cells < 4 {
            return Err(Error::InvalidGrid(format!(
                "need at least 4 cells per axis, got {cells}"
            )));
        }
        if cells.checked_pow(dim as u32).is_none() {
            return Err(Error::InvalidGrid("cell count overflows".into()));
        }
        Ok(Self {
            dim,
            half_width,
            cells,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Cells per axis.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.cells as f64
    }

    /// Volume of one cell, `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Total number of cells, `N^n`.
    pub fn len(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Distance between neighbours along `axis` in the flat layout.
    pub fn stride(&self, axis: usize) -> usize {
        self.cells.pow((self.dim - 1 - axis) as u32)
    }

    /// Cell-center coordinate of index `i` along any axis.
    pub fn center(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    /// Per-axis indices of the flat cell index.
    pub fn unflatten(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        for axis in (0..self.dim).rev() {
            idx[axis] = flat % self.cells;
            flat /= self.cells;
        }
        idx
    }

    /// Cell-center coordinates of the flat cell index (unused axes are 0).
    pub fn coords(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.unflatten(flat);
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            x[axis] = self.center(idx[axis]);
        }
        x
    }

    /// True if the cell lies within `layers` cells of the box edge.
    pub fn in_outer_layer(&self, flat: usize, layers: usize) -> bool {
        let idx = self.unflatten(flat);
        idx[..self.dim]
            .iter()
            .any(|&i| i < layers || i + layers >= self.cells)
    }

    /// Calls `f(base, stride)` once for every grid line parallel to `axis`;
    /// the cells of the line are `base + k * stride` for `k in 0..N`.
    pub(crate) fn for_each_line(&self, axis: usize, mut f: impl FnMut(usize, usize)) {
        let stride = self.stride(axis);
        let outer = self.cells.pow(axis as u32);
        let block = stride * self.cells;
        for o in 0..outer {
            for j in 0..stride {
                f(o * block + j, stride);
            }
        }
    }
}

/// Cell-centered samples of a real function on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f` at every cell center; `f` receives a slice of `dim`
    /// coordinates.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|i| f(&grid.coords(i)[..grid.dim()]))
            .collect();
        Self::from_values(grid, values)
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub(crate) fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        debug_assert_eq!(self.grid, other.grid);
        Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// `a * self + b * other`.
    pub fn linear_combination(&self, a: f64, other: &ScalarField, b: f64) -> Result<ScalarField> {
        if self.grid != other.grid {
            return Err(Error::InvalidGrid("fields live on different grids".into()));
        }
        Self::from_values(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        )
    }
}

/// One cell-centered [`ScalarField`] per axis, all on the same grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            components: vec![ScalarField::zeros(grid); grid.dim()],
        }
    }

    pub fn from_components(components: Vec<ScalarField>) -> Result<Self> {
        let grid = *components
            .first()
            .ok_or_else(|| Error::InvalidGrid("vector field needs components".into()))?
            .grid();
        if components.len() != grid.dim() {
            return Err(Error::InvalidGrid(format!(
                "expected {} components, got {}",
                grid.dim(),
                components.len()
            )));
        }
        if components.iter().any(|c| *c.grid() != grid) {
            return Err(Error::InvalidGrid(
                "components live on different grids".into(),
            ));
        }
        Ok(Self { grid, components })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn component(&self, axis: usize) -> &ScalarField {
        &self.components[axis]
    }

    /// Pointwise Euclidean norm.
    pub fn magnitude(&self) -> ScalarField {
        let mut out = vec![0.0; self.grid.len()];
        for c in &self.components {
            for (o, v) in out.iter_mut().zip(c.values()) {
                *o += v * v;
            }
        }
        out.iter_mut().for_each(|v| *v = v.sqrt());
        ScalarField::from_raw(self.grid, out)
    }

    pub fn max_magnitude(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| {
                self.components
                    .iter()
                    .map(|c| c.values[i] * c.values[i])
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
            .sqrt()
    }

    /// `(∫ |v|^q)^(1/q)`; `q = ∞` gives the max norm.
    pub fn lq_norm(&self, q: f64) -> f64 {
        if q.is_infinite() {
            return self.max_magnitude();
        }
        let mag = self.magnitude();
        integrate(&mag.map(|v| v.powf(q))).powf(1.0 / q)
    }
}

/// Face-centered values of a staggered vector field: along axis `d` there
/// are `N + 1` faces per grid line, face `k` sitting between cells `k - 1`
/// and `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceField {
    grid: GridSpec,
    faces: Vec<Vec<f64>>,
}

impl FaceField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Face values along `axis`, laid out like the cells but with `N + 1`
    /// entries on that axis.
    pub fn axis(&self, axis: usize) -> &[f64] {
        &self.faces[axis]
    }
}

fn face_len(grid: &GridSpec) -> usize {
    grid.len() / grid.cells() * (grid.cells() + 1)
}

/// Flat face index for cell-line `(outer, k, inner)` along `axis`.
fn face_layout(grid: &GridSpec, axis: usize) -> (usize, usize) {
    let inner = grid.stride(axis);
    (inner, inner * (grid.cells() + 1))
}

/// Centered differences with zero extension outside the box.
pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = *f.grid();
    let n = grid.cells();
    let inv_2h = 0.5 / grid.spacing();
    let v = f.values();
    let components = (0..grid.dim())
        .map(|axis| {
            let mut out = vec![0.0; grid.len()];
            grid.for_each_line(axis, |base, s| {
                for k in 0..n {
                    let i = base + k * s;
                    let hi = if k + 1 < n { v[i + s] } else { 0.0 };
                    let lo = if k > 0 { v[i - s] } else { 0.0 };
                    out[i] = (hi - lo) * inv_2h;
                }
            });
            ScalarField::from_raw(grid, out)
        })
        .collect();
    VectorField { grid, components }
}

/// Flux-difference divergence with face fluxes `(v_i + v_{i+1}) / 2` and
/// zero extension; the exact negative adjoint of [`gradient`].
pub fn divergence(v: &VectorField) -> ScalarField {
    let grid = *v.grid();
    let n = grid.cells();
    let inv_h = 1.0 / grid.spacing();
    let mut out = vec![0.0; grid.len()];
    for (axis, comp) in v.components().iter().enumerate() {
        let c = comp.values();
        grid.for_each_line(axis, |base, s| {
            for k in 0..n {
                let i = base + k * s;
                let right = if k + 1 < n {
                    0.5 * (c[i] + c[i + s])
                } else {
                    0.5 * c[i]
                };
                let left = if k > 0 {
                    0.5 * (c[i - s] + c[i])
                } else {
                    0.5 * c[i]
                };
                out[i] += (right - left) * inv_h;
            }
        });
    }
    ScalarField::from_raw(grid, out)
}

/// One-sided differences on cell faces, `(f_k - f_{k-1}) / h`, with zero
/// extension so the two boundary faces see `0`.
pub fn face_gradient(f: &ScalarField) -> FaceField {
    let grid = *f.grid();
    let n = grid.cells();
    let inv_h = 1.0 / grid.spacing();
    let v = f.values();
    let faces = (0..grid.dim())
        .map(|axis| {
            let (inner, block) = face_layout(&grid, axis);
            let mut out = vec![0.0; face_len(&grid)];
            grid.for_each_line(axis, |base, s| {
                let (o, j) = (base / (s * n), base % s);
                let fbase = o * block + j;
                for k in 0..=n {
                    let hi = if k < n { v[base + k * s] } else { 0.0 };
                    let lo = if k > 0 { v[base + (k - 1) * s] } else { 0.0 };
                    out[fbase + k * inner] = (hi - lo) * inv_h;
                }
            });
            out
        })
        .collect();
    FaceField { grid, faces }
}

/// `(F_{k+1} - F_k) / h` summed over axes; the exact negative adjoint of
/// [`face_gradient`].
pub fn face_divergence(flux: &FaceField) -> ScalarField {
    let grid = *flux.grid();
    let n = grid.cells();
    let inv_h = 1.0 / grid.spacing();
    let mut out = vec![0.0; grid.len()];
    for axis in 0..grid.dim() {
        let (inner, block) = face_layout(&grid, axis);
        let fv = flux.axis(axis);
        grid.for_each_line(axis, |base, s| {
            let (o, j) = (base / (s * n), base % s);
            let fbase = o * block + j;
            for k in 0..n {
                out[base + k * s] += (fv[fbase + (k + 1) * inner] - fv[fbase + k * inner]) * inv_h;
            }
        });
    }
    ScalarField::from_raw(grid, out)
}

/// Compact 3/5/7-point Laplacian with zero extension, defined as
/// `face_divergence(face_gradient(f))`.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    face_divergence(&face_gradient(f))
}

/// Cell density of the discrete Dirichlet energy: half the sum of the
/// squared face differences on the faces bounding each cell.
///
/// Summed over the grid this equals `∫ |∇f|^2` in the form adjoint to
/// [`laplacian`], up to the two boundary faces per line.
pub fn gradient_energy_density(f: &ScalarField) -> ScalarField {
    let grid = *f.grid();
    let n = grid.cells();
    let inv_h = 1.0 / grid.spacing();
    let v = f.values();
    let mut out = vec![0.0; grid.len()];
    for axis in 0..grid.dim() {
        grid.for_each_line(axis, |base, s| {
            let mut lo_diff = v[base] * inv_h;
            for k in 0..n {
                let i = base + k * s;
                let hi = if k + 1 < n { v[i + s] } else { 0.0 };
                let hi_diff = (hi - v[i]) * inv_h;
                out[i] += 0.5 * (lo_diff * lo_diff + hi_diff * hi_diff);
                lo_diff = hi_diff;
            }
        });
    }
    ScalarField::from_raw(grid, out)
}

/// Second derivatives: `hess[a][b]` holds `∂_a ∂_b f`.
///
/// Diagonal entries use the 3-point second difference, mixed entries the
/// centered difference along `b` of the centered difference along `a`.
pub fn hessian(f: &ScalarField) -> Vec<Vec<ScalarField>> {
    let grid = *f.grid();
    let dim = grid.dim();
    let n = grid.cells();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let v = f.values();
    let grad = gradient(f);
    let mut hess = vec![vec![ScalarField::zeros(grid); dim]; dim];
    for a in 0..dim {
        let mut diag = vec![0.0; grid.len()];
        grid.for_each_line(a, |base, s| {
            for k in 0..n {
                let i = base + k * s;
                let hi = if k + 1 < n { v[i + s] } else { 0.0 };
                let lo = if k > 0 { v[i - s] } else { 0.0 };
                diag[i] = (hi - 2.0 * v[i] + lo) * inv_h2;
            }
        });
        hess[a][a] = ScalarField::from_raw(grid, diag);
        for b in (a + 1)..dim {
            let mixed = gradient(grad.component(a)).components[b].clone();
            hess[a][b] = mixed.clone();
            hess[b][a] = mixed;
        }
    }
    hess
}

/// Midpoint rule, `h^n Σ f_i`.
pub fn integrate(f: &ScalarField) -> f64 {
    f.grid().cell_volume() * f.values().iter().sum::<f64>()
}

/// `∫ f · g`.
pub fn inner(f: &ScalarField, g: &ScalarField) -> f64 {
    f.grid().cell_volume()
        * f.values()
            .iter()
            .zip(g.values())
            .map(|(a, b)| a * b)
            .sum::<f64>()
}

/// `∫ v · w` for vector fields.
pub fn inner_vec(v: &VectorField, w: &VectorField) -> f64 {
    v.components()
        .iter()
        .zip(w.components())
        .map(|(a, b)| inner(a, b))
        .sum()
}

/// Block-averages `fine` onto `coarse`; the fine cell count must be an
/// integer multiple of the coarse one and both grids must share the box.
pub fn restrict(fine: &ScalarField, coarse: GridSpec) -> Result<ScalarField> {
    let fg = *fine.grid();
    if fg.dim() != coarse.dim()
        || fg.half_width() != coarse.half_width()
        || !fg.cells().is_multiple_of(coarse.cells())
    {
        return Err(Error::InvalidGrid(format!(
            "cannot restrict {} cells onto {} cells",
            fg.cells(),
            coarse.cells()
        )));
    }
    let ratio = fg.cells() / coarse.cells();
    let mut out = vec![0.0; coarse.len()];
    for (i, v) in fine.values().iter().enumerate() {
        let idx = fg.unflatten(i);
        let mut c = 0;
        for &k in &idx[..fg.dim()] {
            c = c * coarse.cells() + k / ratio;
        }
        out[c] += v;
    }
    let scale = 1.0 / (ratio.pow(fg.dim() as u32)) as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(ScalarField::from_raw(coarse, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2(n: usize) -> GridSpec {
        GridSpec::new(2, 2.0, n).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(0, 1.0, 8).is_err());
        assert!(GridSpec::new(4, 1.0, 8).is_err());
        assert!(GridSpec::new(2, 1.0, 3).is_err());
        assert!(GridSpec::new(2, -1.0, 8).is_err());
        assert!(GridSpec::new(2, f64::NAN, 8).is_err());
    }

    #[test]
    fn spacing_is_derived() {
        let g = GridSpec::new(3, 1.5, 12).unwrap();
        assert_eq!(g.spacing() * g.cells() as f64, 2.0 * g.half_width());
        assert_eq!(g.len(), 1728);
        assert_eq!(g.center(0), -1.5 + 0.125);
    }

    #[test]
    fn from_values_validates() {
        let g = grid2(4);
        assert!(matches!(
            ScalarField::from_values(g, vec![0.0; 15]),
            Err(Error::LengthMismatch { .. })
        ));
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(matches!(
            ScalarField::from_values(g, v),
            Err(Error::NonFiniteValue { index: 3 })
        ));
    }

    #[test]
    fn gradient_of_constant_vanishes_inside() {
        let g = grid2(16);
        let f = ScalarField::constant(g, 3.0);
        let grad = gradient(&f);
        for i in 0..g.len() {
            if !g.in_outer_layer(i, 1) {
                for c in grad.components() {
                    assert_eq!(c.values()[i], 0.0);
                }
            }
        }
    }

    #[test]
    fn gradient_exact_on_linear() {
        let g = grid2(16);
        let f = ScalarField::from_fn(g, |x| 2.5 * x[0]).unwrap();
        let grad = gradient(&f);
        for i in 0..g.len() {
            if !g.in_outer_layer(i, 1) {
                assert!((grad.component(0).values()[i] - 2.5).abs() < 1e-12);
                assert_eq!(grad.component(1).values()[i], 0.0);
            }
        }
    }

    #[test]
    fn divergence_of_identity_is_dim() {
        let g = GridSpec::new(3, 1.0, 8).unwrap();
        let comps = (0..3)
            .map(|a| ScalarField::from_fn(g, |x| x[a]).unwrap())
            .collect();
        let v = VectorField::from_components(comps).unwrap();
        let d = divergence(&v);
        for i in 0..g.len() {
            if !g.in_outer_layer(i, 1) {
                assert!((d.values()[i] - 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn laplacian_exact_on_quadratic() {
        for dim in 1..=3 {
            let g = GridSpec::new(dim, 1.0, 8).unwrap();
            let f = ScalarField::from_fn(g, |x| x.iter().map(|v| v * v).sum()).unwrap();
            let lap = laplacian(&f);
            for i in 0..g.len() {
                if !g.in_outer_layer(i, 1) {
                    assert!((lap.values()[i] - 2.0 * dim as f64).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn integrate_constant_is_box_volume() {
        let g = GridSpec::new(2, 3.0, 10).unwrap();
        assert!((integrate(&ScalarField::constant(g, 1.0)) - 36.0).abs() < 1e-12);
        assert_eq!(integrate(&ScalarField::zeros(g)), 0.0);
    }

    #[test]
    fn energy_density_sums_to_minus_f_laplacian() {
        let g = grid2(24);
        let f =
            ScalarField::from_fn(g, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1]) * 4.0).exp()).unwrap();
        let energy = integrate(&gradient_energy_density(&f));
        let dual = -inner(&f, &laplacian(&f));
        assert!((energy - dual).abs() < 1e-12 * energy);
    }

    #[test]
    fn restrict_averages_blocks() {
        let fine = GridSpec::new(1, 1.0, 8).unwrap();
        let coarse = GridSpec::new(1, 1.0, 4).unwrap();
        let f = ScalarField::from_values(fine, (0..8).map(|i| i as f64).collect()).unwrap();
        let r = restrict(&f, coarse).unwrap();
        assert_eq!(r.values(), &[0.5, 2.5, 4.5, 6.5]);
        assert!(restrict(&f, GridSpec::new(1, 1.0, 5).unwrap()).is_err());
    }

    #[test]
    fn hessian_of_quadratic_form() {
        let g = grid2(16);
        let f = ScalarField::from_fn(g, |x| x[0] * x[0] + 3.0 * x[0] * x[1]).unwrap();
        let hess = hessian(&f);
        for i in 0..g.len() {
            if !g.in_outer_layer(i, 2) {
                assert!((hess[0][0].values()[i] - 2.0).abs() < 1e-9);
                assert!((hess[0][1].values()[i] - 3.0).abs() < 1e-9);
                assert!((hess[1][0].values()[i] - 3.0).abs() < 1e-9);
                assert!(hess[1][1].values()[i].abs() < 1e-9);
            }
        }
    }
}
