//! Aperiodic convolution with a fixed kernel on a doubled (zero-padded)
//! grid, so the wrap-around of the discrete transform never reaches the
//! `N^n` output cells.

use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Precomputed kernel spectrum plus the transforms and workspace needed to
/// apply it. The workspace is mutated by [`FreeSpaceConvolver::apply`], so a
/// convolver is owned by a single run.
pub(crate) struct FreeSpaceConvolver {
    dim: usize,
    cells: usize,
    padded: usize,
    half: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel_hat: Vec<Complex<f64>>,
    real: Vec<f64>,
    spectrum: Vec<Complex<f64>>,
    lines: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl FreeSpaceConvolver {
    /// `kernel(offset)` gives the weight for an integer cell offset
    /// (components in `-N..=N`), already multiplied by the cell volume.
    pub(crate) fn new(dim: usize, cells: usize, kernel: impl Fn(&[i64]) -> f64) -> Self {
        let padded = 2 * cells;
        let half = padded / 2 + 1;
        let mut real_planner = RealFftPlanner::<f64>::new();
        let r2c = real_planner.plan_fft_forward(padded);
        let c2r = real_planner.plan_fft_inverse(padded);
        let mut planner = FftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(padded);
        let inverse = planner.plan_fft_inverse(padded);
        let rows = padded.pow(dim as u32 - 1);
        let scratch_len = [
            r2c.get_scratch_len(),
            c2r.get_scratch_len(),
            forward.get_inplace_scratch_len(),
            inverse.get_inplace_scratch_len(),
        ]
        .into_iter()
        .max()
        .unwrap_or(0);

        let mut conv = Self {
            dim,
            cells,
            padded,
            half,
            r2c,
            c2r,
            forward,
            inverse,
            kernel_hat: Vec::new(),
            real: vec![0.0; rows * padded],
            spectrum: vec![Complex::default(); rows * half],
            lines: Vec::new(),
            scratch: vec![Complex::default(); scratch_len],
        };

        let mut offset = vec![0i64; dim];
        for (flat, slot) in conv.real.iter_mut().enumerate() {
            let mut rest = flat;
            for axis in (0..dim).rev() {
                let k = (rest % padded) as i64;
                rest /= padded;
                offset[axis] = if k <= cells as i64 {
                    k
                } else {
                    k - padded as i64
                };
            }
            *slot = kernel(&offset);
        }
        conv.transform_forward(false);
        let norm = 1.0 / (padded as f64).powi(dim as i32);
        conv.kernel_hat = conv.spectrum.iter().map(|c| c * norm).collect();
        conv
    }

    /// Writes `(kernel * source)` restricted to the original grid into `out`.
    pub(crate) fn apply(&mut self, source: &[f64], out: &mut [f64]) {
        let (n, p) = (self.cells, self.padded);
        self.real.iter_mut().for_each(|v| *v = 0.0);
        for (row, chunk) in source.chunks_exact(n).enumerate() {
            let prow = self.padded_row(row);
            self.real[prow * p..prow * p + n].copy_from_slice(chunk);
        }
        self.transform_forward(true);
        for (s, k) in self.spectrum.iter_mut().zip(&self.kernel_hat) {
            *s *= k;
        }
        self.transform_inverse();
        for (row, chunk) in out.chunks_exact_mut(n).enumerate() {
            let prow = self.padded_row(row);
            chunk.copy_from_slice(&self.real[prow * p..prow * p + n]);
        }
    }

    /// Padded row index of row `row` of the unpadded `N^(n-1)` row set.
    fn padded_row(&self, mut row: usize) -> usize {
        let mut prow = 0;
        let mut scale = 1;
        for _ in 0..self.dim - 1 {
            prow += (row % self.cells) * scale;
            row /= self.cells;
            scale *= self.padded;
        }
        prow
    }

    /// True if every leading index of the padded row is inside the source.
    fn row_in_source(&self, mut prow: usize) -> bool {
        for _ in 0..self.dim - 1 {
            if prow % self.padded >= self.cells {
                return false;
            }
            prow /= self.padded;
        }
        true
    }

    fn transform_forward(&mut self, skip_zero_rows: bool) {
        let (p, h) = (self.padded, self.half);
        let rows = self.real.len() / p;
        for row in 0..rows {
            let skip = skip_zero_rows && !self.row_in_source(row);
            let spec = &mut self.spectrum[row * h..(row + 1) * h];
            if skip {
                spec.iter_mut().for_each(|c| *c = Complex::default());
                continue;
            }
            self.r2c
                .process_with_scratch(
                    &mut self.real[row * p..(row + 1) * p],
                    spec,
                    &mut self.scratch,
                )
                .expect("real transform lengths are fixed at construction");
        }
        for axis in 0..self.dim - 1 {
            self.transform_axis(axis, true);
        }
    }

    fn transform_inverse(&mut self) {
        for axis in 0..self.dim - 1 {
            self.transform_axis(axis, false);
        }
        let (p, h) = (self.padded, self.half);
        let rows = self.real.len() / p;
        for row in 0..rows {
            if !self.row_in_source(row) {
                continue;
            }
            let spec = &mut self.spectrum[row * h..(row + 1) * h];
            // Hermitian symmetry makes these exactly real; clear the rounding.
            spec[0].im = 0.0;
            spec[h - 1].im = 0.0;
            self.c2r
                .process_with_scratch(
                    spec,
                    &mut self.real[row * p..(row + 1) * p],
                    &mut self.scratch,
                )
                .expect("complex-to-real input has real end points");
        }
    }

    /// Complex transform along a leading axis of the `[P; n-1] x H` spectrum.
    fn transform_axis(&mut self, axis: usize, forward: bool) {
        let p = self.padded;
        let inner = p.pow((self.dim - 2 - axis) as u32) * self.half;
        let outer = p.pow(axis as u32);
        self.lines.resize(inner * p, Complex::default());
        let fft = if forward {
            &self.forward
        } else {
            &self.inverse
        };
        for o in 0..outer {
            let block = &mut self.spectrum[o * p * inner..(o + 1) * p * inner];
            for k in 0..p {
                for j in 0..inner {
                    self.lines[j * p + k] = block[k * inner + j];
                }
            }
            fft.process_with_scratch(&mut self.lines, &mut self.scratch);
            for k in 0..p {
                for j in 0..inner {
                    block[k * inner + j] = self.lines[j * p + k];
                }
            }
        }
    }
}
