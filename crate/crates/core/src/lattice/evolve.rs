//! Free Klein-Gordon propagation and the retarded (Duhamel) solution
//! operator, both exact per Fourier mode in space.

use num_complex::Complex64;
use rayon::prelude::*;

use super::{
    CauchyData, FieldError, FieldSnapshot, GridSpec, Spectral, TimeGrid, TimeSampledField,
};

/// Field, first and second time derivative at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeState {
    pub field: FieldSnapshot,
    pub velocity: FieldSnapshot,
    pub acceleration: FieldSnapshot,
}

/// Spectral coefficients of the free solution at time `t`:
/// `c(t) = cos(w t) c0 + sin(w t)/w c1` and its first two derivatives.
fn free_modes(
    c0: &[Complex64],
    c1: &[Complex64],
    omega: &[f64],
    t: f64,
) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
    let mut u = Vec::with_capacity(c0.len());
    let mut v = Vec::with_capacity(c0.len());
    let mut a = Vec::with_capacity(c0.len());
    for ((&a0, &a1), &w) in c0.iter().zip(c1).zip(omega) {
        let (s, c) = (w * t).sin_cos();
        let val = a0 * c + a1 * (s / w);
        u.push(val);
        v.push(a1 * c - a0 * (w * s));
        a.push(-val * (w * w));
    }
    (u, v, a)
}

/// Free evolution of Cauchy data to time `t`.
pub fn free_evolve(data: &CauchyData, t: f64) -> FreeState {
    let grid = *data.grid();
    let spectral = Spectral::new(&grid);
    let omega = grid.frequencies();
    let c0 = spectral.forward(data.phi0.values());
    let c1 = spectral.forward(data.phi1.values());
    let (u, v, a) = free_modes(&c0, &c1, &omega, t);
    let snap = |c: &[Complex64]| FieldSnapshot::new(grid, spectral.inverse(c)).expect("finite");
    FreeState {
        field: snap(&u),
        velocity: snap(&v),
        acceleration: snap(&a),
    }
}

/// The free field sampled on `time`, with analytic derivatives. Sample 0
/// holds the Cauchy data verbatim.
pub fn free_field(data: &CauchyData, time: TimeGrid) -> TimeSampledField {
    let grid = *data.grid();
    let spectral = Spectral::new(&grid);
    let omega = grid.frequencies();
    let c0 = spectral.forward(data.phi0.values());
    let c1 = spectral.forward(data.phi1.values());
    let samples: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..time.samples())
        .into_par_iter()
        .map(|j| {
            let (u, v, a) = free_modes(&c0, &c1, &omega, time.time(j));
            let a = spectral.inverse(&a);
            if j == 0 {
                (data.phi0.values().to_vec(), data.phi1.values().to_vec(), a)
            } else {
                (spectral.inverse(&u), spectral.inverse(&v), a)
            }
        })
        .collect();
    assemble(grid, time, samples)
}

fn assemble(
    grid: GridSpec,
    time: TimeGrid,
    samples: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)>,
) -> TimeSampledField {
    let len = grid.sites() * time.samples();
    let mut values = Vec::with_capacity(len);
    let mut velocity = Vec::with_capacity(len);
    let mut acceleration = Vec::with_capacity(len);
    for (u, v, a) in samples {
        values.extend(u);
        velocity.extend(v);
        acceleration.extend(a);
    }
    TimeSampledField::new(grid, time, values)
        .and_then(|f| f.with_velocity(velocity))
        .and_then(|f| f.with_acceleration(acceleration))
        .expect("consistent lengths")
}

/// Solves `(box + m^2) u = -source` with zero Cauchy data at `t = 0`.
///
/// Per mode, `u(t) = -int_0^t sin(w (t - s))/w s(s) ds` is evaluated with the
/// trapezoidal rule on the sample grid. Splitting the kernel as
/// `sin(wt)cos(ws) - cos(wt)sin(ws)` turns every sample into a running sum,
/// so the cost is linear in the number of samples. The first derivative is
/// the same quadrature of the differentiated kernel and the second follows
/// from the equation, `u'' = -s - w^2 u`.
pub fn solve_retarded(source: &TimeSampledField) -> Result<TimeSampledField, FieldError> {
    let grid = *source.grid();
    let time = *source.time_grid();
    let spectral = Spectral::new(&grid);
    let omega = grid.frequencies();
    let nt = time.samples();
    let dt = time.dt;

    let coeffs: Vec<Vec<Complex64>> = (0..nt)
        .into_par_iter()
        .map(|j| spectral.forward(source.sample(j)))
        .collect();

    // per-mode time series, mode-major
    let per_mode: Vec<[Vec<Complex64>; 3]> = omega
        .par_iter()
        .enumerate()
        .map(|(k, &w)| {
            let mut u = Vec::with_capacity(nt);
            let mut v = Vec::with_capacity(nt);
            let mut a = Vec::with_capacity(nt);
            let mut run_c = Complex64::default();
            let mut run_s = Complex64::default();
            for (j, c) in coeffs.iter().enumerate() {
                let g = c[k];
                let (s, co) = (w * time.time(j)).sin_cos();
                let (cj, sj) = if j == 0 {
                    (Complex64::default(), Complex64::default())
                } else {
                    (run_c + g * (0.5 * dt * co), run_s + g * (0.5 * dt * s))
                };
                let uj = -(cj * s - sj * co) / w;
                u.push(uj);
                v.push(-(cj * co + sj * s));
                a.push(-g - uj * (w * w));
                let weight = if j == 0 { 0.5 * dt } else { dt };
                run_c += g * (weight * co);
                run_s += g * (weight * s);
            }
            [u, v, a]
        })
        .collect();

    let samples: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..nt)
        .into_par_iter()
        .map(|j| {
            let gather = |which: usize| -> Vec<f64> {
                let c: Vec<Complex64> = per_mode.iter().map(|m| m[which][j]).collect();
                spectral.inverse(&c)
            };
            (gather(0), gather(1), gather(2))
        })
        .collect();
    let out = assemble(grid, time, samples);
    match out.first_non_finite() {
        Some(j) => Err(FieldError::NonFinite(format!(
            "retarded solution at sample {j}"
        ))),
        None => Ok(out),
    }
}

/// Applies `-Laplacian + m^2` to a snapshot's values.
pub fn klein_gordon_spatial(grid: &GridSpec, spectral: &Spectral, values: &[f64]) -> Vec<f64> {
    let mut c = spectral.forward(values);
    for (ci, w) in c.iter_mut().zip(grid.frequencies()) {
        *ci *= w * w;
    }
    spectral.inverse(&c)
}

/// Position-space retarded kernel restricted to a finite mode set,
/// `theta(z0) / V * sum_k sin(w_k z0)/w_k exp(i k.z)`.
pub fn retarded_kernel(
    mass: f64,
    volume: f64,
    modes: &[Vec<f64>],
    z0: f64,
    z: &[f64],
) -> Complex64 {
    if z0 < 0.0 {
        return Complex64::default();
    }
    modes
        .iter()
        .map(|k| {
            let w = super::dispersion(mass, k.iter().map(|x| x * x).sum());
            let phase: f64 = k.iter().zip(z).map(|(a, b)| a * b).sum();
            Complex64::from_polar((w * z0).sin() / w, phase)
        })
        .sum::<Complex64>()
        / volume
}
