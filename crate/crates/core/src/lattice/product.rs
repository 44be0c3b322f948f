use num_complex::Complex64;
use rayon::prelude::*;

use super::spectral::{is_nyquist, pad_index};
use super::{FieldError, GridSpec, Spectral, TimeSampledField};

/// Site-wise product of `p` fields, either plain or dealiased by zero-padding
/// the spectrum to `(p+1)/2` times the grid size.
pub struct Multiplier {
    grid: GridSpec,
    factors: usize,
    dealias: Option<(Spectral, Spectral, usize)>,
}

impl Multiplier {
    pub fn new(grid: GridSpec, factors: usize, dealias: bool) -> Self {
        let dealias = dealias.then(|| {
            let padded = padded_size(grid.n, factors);
            (
                Spectral::new(&grid),
                Spectral::with_size(grid.dims, padded),
                padded,
            )
        });
        Self {
            grid,
            factors,
            dealias,
        }
    }

    pub fn padded_size(&self) -> Option<usize> {
        self.dealias.as_ref().map(|d| d.2)
    }

    pub fn multiply(&self, factors: &[&[f64]]) -> Vec<f64> {
        debug_assert_eq!(factors.len(), self.factors);
        match &self.dealias {
            None => {
                let mut out = factors[0].to_vec();
                for f in &factors[1..] {
                    out.iter_mut().zip(f.iter()).for_each(|(a, b)| *a *= b);
                }
                out
            }
            Some((base, padded, size)) => {
                let dims = self.grid.dims;
                let n = self.grid.n;
                let mut acc: Option<Vec<f64>> = None;
                for f in factors {
                    let c = base.forward(f);
                    let mut big = vec![Complex64::default(); padded.len()];
                    for (i, ci) in c.into_iter().enumerate() {
                        big[pad_index(dims, n, *size, i)] = ci;
                    }
                    let phys = padded.inverse(&big);
                    acc = Some(match acc {
                        None => phys,
                        Some(mut a) => {
                            a.iter_mut().zip(&phys).for_each(|(x, y)| *x *= y);
                            a
                        }
                    });
                }
                let big = padded.forward(&acc.expect("at least one factor"));
                let mut c = vec![Complex64::default(); base.len()];
                for (i, ci) in c.iter_mut().enumerate() {
                    if !is_nyquist(dims, n, i) {
                        *ci = big[pad_index(dims, n, *size, i)];
                    }
                }
                base.inverse(&c)
            }
        }
    }
}

/// Smallest even size `>= (p+1) n / 2`.
pub fn padded_size(n: usize, factors: usize) -> usize {
    let m = ((factors + 1) * n).div_ceil(2);
    m + m % 2
}

/// Sample-wise, site-wise product of fields sharing grid and time sampling.
pub fn pointwise_product(
    fields: &[&TimeSampledField],
    dealias: bool,
) -> Result<TimeSampledField, FieldError> {
    let first = fields
        .first()
        .ok_or_else(|| FieldError::Shape("product of zero fields".into()))?;
    for f in &fields[1..] {
        first.check_same_sampling(f)?;
    }
    let grid = *first.grid();
    let time = *first.time_grid();
    let mult = Multiplier::new(grid, fields.len(), dealias);
    let samples: Vec<Vec<f64>> = (0..time.samples())
        .into_par_iter()
        .map(|j| {
            let factors: Vec<&[f64]> = fields.iter().map(|f| f.sample(j)).collect();
            mult.multiply(&factors)
        })
        .collect();
    let values: Vec<f64> = samples.into_iter().flatten().collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(FieldError::NonFinite(format!(
            "product overflow at sample {}",
            i / grid.sites()
        )));
    }
    TimeSampledField::new(grid, time, values)
}
