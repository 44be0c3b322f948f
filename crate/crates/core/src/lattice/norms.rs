//! Discrete Sobolev norms on the torus.
//!
//! `||f||_q^2 = V * sum_k (1 + |k|^2)^q |c_k|^2` with `c_k` the normalized
//! Fourier coefficients, so `q = 0` is the L2 norm over the box.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::initial::random_band_limited;
use super::{FieldError, FieldSnapshot, GridSpec, Spectral, TimeSampledField};

/// Cached transform and multipliers for repeated norm evaluation on a grid.
pub struct NormKernel {
    grid: GridSpec,
    spectral: Spectral,
    k2: Vec<f64>,
}

impl NormKernel {
    pub fn new(grid: &GridSpec) -> Self {
        Self {
            grid: *grid,
            spectral: Spectral::new(grid),
            k2: grid.k_squared(),
        }
    }

    pub fn norm(&self, values: &[f64], q: i32) -> f64 {
        let c = self.spectral.forward(values);
        let sum: f64 = c
            .iter()
            .zip(&self.k2)
            .map(|(ci, k2)| (1.0 + k2).powi(q) * ci.norm_sqr())
            .sum();
        (self.grid.volume() * sum).sqrt()
    }
}

pub fn sobolev_norm(snapshot: &FieldSnapshot, q: i32) -> f64 {
    NormKernel::new(snapshot.grid()).norm(snapshot.values(), q)
}

/// Velocity and acceleration samples: stored ones when present, otherwise
/// second-order finite differences (one-sided at the ends).
pub fn time_derivatives(field: &TimeSampledField) -> Result<(Vec<f64>, Vec<f64>), FieldError> {
    let nt = field.samples();
    if (field.velocity().is_none() || field.acceleration().is_none()) && nt < 3 {
        return Err(FieldError::Resolution(format!(
            "need at least 3 time samples to difference, have {nt}"
        )));
    }
    let s = field.grid().sites();
    let h = field.time_grid().dt;
    let u = |j: usize, i: usize| field.values()[j * s + i];
    let velocity = match field.velocity() {
        Some(v) => v.to_vec(),
        None => {
            let mut v = vec![0.0; nt * s];
            for j in 0..nt {
                for i in 0..s {
                    v[j * s + i] = if j == 0 {
                        (-3.0 * u(0, i) + 4.0 * u(1, i) - u(2, i)) / (2.0 * h)
                    } else if j == nt - 1 {
                        (3.0 * u(j, i) - 4.0 * u(j - 1, i) + u(j - 2, i)) / (2.0 * h)
                    } else {
                        (u(j + 1, i) - u(j - 1, i)) / (2.0 * h)
                    };
                }
            }
            v
        }
    };
    let acceleration = match field.acceleration() {
        Some(a) => a.to_vec(),
        None => {
            let mut a = vec![0.0; nt * s];
            for j in 0..nt {
                let c = j.clamp(1, nt - 2);
                for i in 0..s {
                    a[j * s + i] = (u(c + 1, i) - 2.0 * u(c, i) + u(c - 1, i)) / (h * h);
                }
            }
            a
        }
    };
    Ok((velocity, acceleration))
}

/// `max_t max(||u||_q, ||u_t||_q, ||u_tt||_{q-1})` over the samples.
pub fn triple_norm(field: &TimeSampledField, q: u32) -> Result<f64, FieldError> {
    let (velocity, acceleration) = time_derivatives(field)?;
    let kernel = NormKernel::new(field.grid());
    let s = field.grid().sites();
    let q = q as i32;
    Ok((0..field.samples())
        .into_par_iter()
        .map(|j| {
            let r = j * s..(j + 1) * s;
            kernel
                .norm(&field.values()[r.clone()], q)
                .max(kernel.norm(&velocity[r.clone()], q))
                .max(kernel.norm(&acceleration[r], q - 1))
        })
        .reduce(|| 0.0, f64::max))
}

/// `max_t ||a(t) - b(t)||_q` over the shared samples.
pub fn max_sobolev_distance(
    a: &TimeSampledField,
    b: &TimeSampledField,
    q: i32,
) -> Result<f64, FieldError> {
    a.check_same_sampling(b)?;
    let kernel = NormKernel::new(a.grid());
    Ok((0..a.samples())
        .into_par_iter()
        .map(|j| {
            let d: Vec<f64> = a
                .sample(j)
                .iter()
                .zip(b.sample(j))
                .map(|(x, y)| x - y)
                .collect();
            kernel.norm(&d, q)
        })
        .reduce(|| 0.0, f64::max))
}

/// Empirical algebra constant of the discrete `H^q` norm, the largest
/// observed `||fg||_q / (||f||_q ||g||_q)` over a fixed family of test
/// functions. It is an estimate (a lower bound on the true supremum).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlgebraConstant {
    pub value: f64,
    pub pairs: usize,
    pub worst_pair: String,
}

/// Test family: the constant, `cos`/`sin` of each axis-0 harmonic up to the
/// band, band-projected Gaussians of width `L/4, L/8, L/16`, and random
/// band-limited fields for seeds `0..16` at bands `1, 2, B`, where
/// `B = max(1, n/4 - 1)` keeps every product free of aliasing. All
/// unordered pairs, including squares, are tested.
pub fn algebra_constant_family(grid: &GridSpec) -> Vec<(String, FieldSnapshot)> {
    let band = (grid.n / 4).saturating_sub(1).max(1);
    let l = grid.box_len;
    let spectral = Spectral::new(grid);
    let project = |f: FieldSnapshot| -> FieldSnapshot {
        let mut c = spectral.forward(f.values());
        for (i, ci) in c.iter_mut().enumerate() {
            let idx = grid.unflatten(i);
            if (0..grid.dims).any(|a| grid.frequency_index(idx[a]).unsigned_abs() as usize > band) {
                *ci = Default::default();
            }
        }
        FieldSnapshot::new(*grid, spectral.inverse(&c)).expect("finite")
    };
    let mut family = vec![(
        "const".to_owned(),
        FieldSnapshot::from_fn(*grid, |_| 1.0).unwrap(),
    )];
    for j in 1..=band {
        let k = 2.0 * PI * j as f64 / l;
        family.push((
            format!("cos{j}"),
            FieldSnapshot::from_fn(*grid, |x| (k * x[0]).cos()).unwrap(),
        ));
        family.push((
            format!("sin{j}"),
            FieldSnapshot::from_fn(*grid, |x| (k * x[0]).sin()).unwrap(),
        ));
    }
    for div in [4.0, 8.0, 16.0] {
        let w = l / div;
        let g = FieldSnapshot::from_fn(*grid, |x| {
            let r2: f64 = x
                .iter()
                .map(|&xi| {
                    let d = (xi - 0.5 * l).abs();
                    let d = d.min(l - d);
                    d * d
                })
                .sum();
            (-r2 / (2.0 * w * w)).exp()
        })
        .unwrap();
        family.push((format!("gauss(L/{div})"), project(g)));
    }
    let mut bands = vec![1, 2, band];
    bands.sort_unstable();
    bands.dedup();
    for b in bands.into_iter().filter(|&b| b <= band) {
        for seed in 0..16 {
            family.push((
                format!("random(seed={seed},band={b})"),
                random_band_limited(grid, seed, b),
            ));
        }
    }
    family
}

pub fn estimate_algebra_constant(grid: &GridSpec, q: u32) -> AlgebraConstant {
    let family = algebra_constant_family(grid);
    let kernel = NormKernel::new(grid);
    let q = q as i32;
    let norms: Vec<f64> = family
        .iter()
        .map(|(_, f)| kernel.norm(f.values(), q))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..family.len())
        .flat_map(|i| (i..family.len()).map(move |j| (i, j)))
        .collect();
    let (value, worst) = pairs
        .par_iter()
        .map(|&(i, j)| {
            let prod: Vec<f64> = family[i]
                .1
                .values()
                .iter()
                .zip(family[j].1.values())
                .map(|(a, b)| a * b)
                .collect();
            (kernel.norm(&prod, q) / (norms[i] * norms[j]), (i, j))
        })
        .reduce(
            || (0.0, (0, 0)),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    AlgebraConstant {
        value,
        pairs: pairs.len(),
        worst_pair: format!("{} x {}", family[worst.0].0, family[worst.1].0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{free_field, CauchyData, TimeGrid};

    fn grid() -> GridSpec {
        GridSpec::new(1, 32, 2.0 * PI, 1.0).unwrap()
    }

    #[test]
    fn norm_examples() {
        let g = grid();
        assert_eq!(sobolev_norm(&FieldSnapshot::zeros(g), 1), 0.0);
        let c = FieldSnapshot::from_fn(g, |_| -3.0).unwrap();
        assert!((sobolev_norm(&c, 0) - 3.0 * (2.0 * PI).sqrt()).abs() < 1e-12);
        let f = random_band_limited(&g, 4, 5);
        for q in [0, 1, 2] {
            assert!((sobolev_norm(&f.scaled(2.0), q) - 2.0 * sobolev_norm(&f, q)).abs() < 1e-12);
        }
    }

    #[test]
    fn parseval_physical_vs_spectral() {
        let g = grid();
        let f = random_band_limited(&g, 9, 7);
        let physical = (f.values().iter().map(|v| v * v).sum::<f64>() * g.cell_volume()).sqrt();
        assert!((physical - sobolev_norm(&f, 0)).abs() < 1e-12 * physical);
    }

    #[test]
    fn h1_norm_of_mode() {
        // ||cos(2x)||_1^2 = V (1 + 4) / 2
        let g = grid();
        let f = FieldSnapshot::from_fn(g, |x| (2.0 * x[0]).cos()).unwrap();
        assert!((sobolev_norm(&f, 1) - (2.0 * PI * 5.0 / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn triple_norm_homogeneity_and_free_bound() {
        let g = grid();
        let a = 0.3;
        let data = CauchyData::new(
            FieldSnapshot::from_fn(g, |x| a * (2.0 * x[0]).cos()).unwrap(),
            FieldSnapshot::zeros(g),
        )
        .unwrap();
        let field = free_field(&data, TimeGrid::new(1.0, 1e-3).unwrap());
        let n = triple_norm(&field, 1).unwrap();
        assert!((triple_norm(&field.scaled(-2.5), 1).unwrap() - 2.5 * n).abs() < 1e-12 * n);
        let bound = sobolev_norm(&data.phi0, 2) + sobolev_norm(&data.phi1, 1);
        assert!(n <= bound * (1.0 + 1e-12), "{n} > {bound}");
        // phi'' = -5 phi for this mode, so the H^0 norm of phi'' dominates at t = 0
        assert!((n - 5.0 * sobolev_norm(&data.phi0, 0)).abs() < 1e-10);
        assert_eq!(
            triple_norm(
                &TimeSampledField::zeros(g, TimeGrid::new(1.0, 0.5).unwrap()),
                1
            )
            .unwrap(),
            0.0
        );
    }

    #[test]
    fn differencing_needs_three_samples() {
        let g = grid();
        let f = TimeSampledField::new(g, TimeGrid::new(1.0, 1.0).unwrap(), vec![0.0; 64]).unwrap();
        assert!(matches!(triple_norm(&f, 1), Err(FieldError::Resolution(_))));
    }

    #[test]
    fn algebra_constant_covers_family_and_constant_pair() {
        let g = grid();
        let c = estimate_algebra_constant(&g, 1);
        assert!(c.value >= 1.0 / g.volume().sqrt() - 1e-12);
        assert!(c.value.is_finite() && c.pairs > 100);
    }
}
