use serde::{Deserialize, Serialize};

use super::FieldError;

/// Periodic box `[0, L)^d` sampled with `n` points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: usize,
    pub n: usize,
    pub box_len: f64,
    pub mass: f64,
}

impl GridSpec {
    pub fn new(dims: usize, n: usize, box_len: f64, mass: f64) -> Result<Self, FieldError> {
        let mut problems = Vec::new();
        if !(1..=3).contains(&dims) {
            problems.push(format!("dims must be 1, 2 or 3, got {dims}"));
        }
        if n < 2 || !n.is_multiple_of(2) {
            problems.push(format!("grid_n must be an even integer >= 2, got {n}"));
        }
        if !(box_len.is_finite() && box_len > 0.0) {
            problems.push(format!("box_L must be positive, got {box_len}"));
        }
        if !(mass.is_finite() && mass > 0.0) {
            problems.push(format!("mass must be positive, got {mass}"));
        }
        if problems.is_empty() {
            Ok(Self {
                dims,
                n,
                box_len,
                mass,
            })
        } else {
            Err(FieldError::InvalidGrid(problems.join("; ")))
        }
    }

    pub fn sites(&self) -> usize {
        self.n.pow(self.dims as u32)
    }

    pub fn spacing(&self) -> f64 {
        self.box_len / self.n as f64
    }

    pub fn volume(&self) -> f64 {
        self.box_len.powi(self.dims as i32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dims as i32)
    }

    /// `M = max(m, 1/m)`.
    pub fn mass_constant(&self) -> f64 {
        self.mass.max(1.0 / self.mass)
    }

    /// Signed frequency index in `-n/2 .. n/2` for FFT slot `i`.
    pub fn frequency_index(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Per-axis multi-index of a flat row-major site (or mode) index, last
    /// axis fastest.
    pub fn unflatten(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for axis in (0..self.dims).rev() {
            idx[axis] = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    /// Wavevector of spectral slot `flat`, `k = 2 pi j / L` per axis.
    pub fn wavevector(&self, flat: usize) -> Vec<f64> {
        let idx = self.unflatten(flat);
        (0..self.dims)
            .map(|a| {
                2.0 * std::f64::consts::PI * self.frequency_index(idx[a]) as f64 / self.box_len
            })
            .collect()
    }

    pub fn wavevectors(&self) -> Vec<Vec<f64>> {
        (0..self.sites()).map(|i| self.wavevector(i)).collect()
    }

    /// `|k|^2` for every spectral slot.
    pub fn k_squared(&self) -> Vec<f64> {
        (0..self.sites())
            .map(|i| self.wavevector(i).iter().map(|k| k * k).sum())
            .collect()
    }

    /// `omega_k` for every spectral slot.
    pub fn frequencies(&self) -> Vec<f64> {
        self.k_squared()
            .into_iter()
            .map(|k2| (k2 + self.mass * self.mass).sqrt())
            .collect()
    }

    /// Dispersion relation `omega_k = sqrt(|k|^2 + m^2)`.
    pub fn dispersion(&self, k: &[f64]) -> f64 {
        dispersion(self.mass, k.iter().map(|x| x * x).sum())
    }

    /// Largest `omega_k` resolved by the grid.
    pub fn max_frequency(&self) -> f64 {
        let k = std::f64::consts::PI * self.n as f64 / self.box_len;
        dispersion(self.mass, self.dims as f64 * k * k)
    }

    /// Physical coordinates of site `flat`.
    pub fn position(&self, flat: usize) -> Vec<f64> {
        let idx = self.unflatten(flat);
        (0..self.dims)
            .map(|a| idx[a] as f64 * self.spacing())
            .collect()
    }
}

pub fn dispersion(mass: f64, k_squared: f64) -> f64 {
    (k_squared + mass * mass).sqrt()
}
