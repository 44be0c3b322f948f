use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::GridSpec;

/// Multi-dimensional DFT on an `n^d` periodic lattice.
///
/// Coefficients are normalized so that `f(x) = sum_k c_k exp(i k.x)`, i.e.
/// `c_k = F_k / n^d` with `F` the unnormalized forward transform. The same
/// coefficients then describe the function on any finer grid.
#[derive(Clone)]
pub struct Spectral {
    dims: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Spectral {
    pub fn new(grid: &GridSpec) -> Self {
        Self::with_size(grid.dims, grid.n)
    }

    pub fn with_size(dims: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dims,
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_in_place(&mut buf);
        buf
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len());
        self.transform(buf, &*self.forward);
        let scale = 1.0 / self.len() as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse_in_place(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len());
        self.transform(buf, &*self.inverse);
    }

    fn transform(&self, buf: &mut [Complex64], fft: &dyn Fft<f64>) {
        let n = self.n;
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        // last axis: contiguous lines
        fft.process_with_scratch(buf, &mut scratch);
        let mut line = vec![Complex64::default(); n];
        for axis in (0..self.dims.saturating_sub(1)).rev() {
            let stride = n.pow((self.dims - 1 - axis) as u32);
            let block = stride * n;
            for start in (0..buf.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (i, slot) in line.iter_mut().enumerate() {
                        *slot = buf[base + i * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        buf[base + i * stride] = *v;
                    }
                }
            }
        }
    }
}

/// Maps spectral slot `flat` of a `from`-point grid to the slot with the same
/// signed frequency on a `to`-point grid (`to >= from`).
pub(crate) fn pad_index(dims: usize, from: usize, to: usize, flat: usize) -> usize {
    let mut rest = flat;
    let mut idx = [0usize; 3];
    for axis in (0..dims).rev() {
        idx[axis] = rest % from;
        rest /= from;
    }
    let mut out = 0;
    for &i in idx.iter().take(dims) {
        let j = if i < from / 2 {
            i as i64
        } else {
            i as i64 - from as i64
        };
        let slot = if j >= 0 {
            j as usize
        } else {
            (to as i64 + j) as usize
        };
        out = out * to + slot;
    }
    out
}

/// True when slot `flat` of an `n`-point grid carries the Nyquist index on
/// some axis.
pub(crate) fn is_nyquist(dims: usize, n: usize, flat: usize) -> bool {
    let mut rest = flat;
    for _ in 0..dims {
        if rest % n == n / 2 {
            return true;
        }
        rest /= n;
    }
    false
}
