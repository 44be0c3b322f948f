//! Direct time stepping of `(box + m^2) phi + lambda phi^p = 0`, independent of
//! the series expansion.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::{
    CauchyData, FieldError, GridSpec, Multiplier, Spectral, TimeGrid, TimeSampledField,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Scheme {
    /// Half kick, exact linear flow per mode, half kick. Stable for
    /// `dt w_max <= pi`.
    StrangSplitting,
    /// Velocity Verlet with the spectral Laplacian. Stable for
    /// `dt w_max < 2`.
    Leapfrog,
}

impl Scheme {
    pub fn stability_limit(self) -> f64 {
        match self {
            Scheme::StrangSplitting => std::f64::consts::PI,
            Scheme::Leapfrog => 2.0,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::StrangSplitting => "strang-splitting",
            Scheme::Leapfrog => "leapfrog",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "strang-splitting" | "strang" => Ok(Scheme::StrangSplitting),
            "leapfrog" => Ok(Scheme::Leapfrog),
            other => Err(format!(
                "unknown scheme {other:?} (strang-splitting, leapfrog)"
            )),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("invalid integrator configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("{scheme} with dt={dt} diverged at t={time}: sup|phi| = {size:e}")]
    Divergence {
        scheme: Scheme,
        dt: f64,
        time: f64,
        size: f64,
    },
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub lambda: f64,
    pub p: usize,
    pub time: TimeGrid,
    pub scheme: Scheme,
    pub dealias: bool,
    /// Sup-norm growth factor over the initial data that counts as
    /// divergence.
    pub divergence_factor: f64,
}

impl IntegratorConfig {
    pub fn new(lambda: f64, p: usize, time: TimeGrid, scheme: Scheme) -> Self {
        Self {
            lambda,
            p,
            time,
            scheme,
            dealias: false,
            divergence_factor: 1e6,
        }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<(), IntegratorError> {
        let mut bad = Vec::new();
        if self.p < 2 {
            bad.push(format!("p must be >= 2, got {}", self.p));
        }
        if !self.lambda.is_finite() {
            bad.push(format!("lambda must be finite, got {}", self.lambda));
        }
        let courant = self.time.dt * grid.max_frequency();
        let limit = self.scheme.stability_limit();
        let unstable = match self.scheme {
            Scheme::StrangSplitting => courant > limit,
            Scheme::Leapfrog => courant >= limit,
        };
        if unstable {
            bad.push(format!(
                "dt={} gives dt*w_max={courant:.4}, beyond the {} limit {limit}",
                self.time.dt, self.scheme
            ));
        }
        if self.divergence_factor.is_nan() || self.divergence_factor <= 1.0 {
            bad.push(format!(
                "divergence factor must exceed 1, got {}",
                self.divergence_factor
            ));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(IntegratorError::Config(bad))
        }
    }
}

struct Stepper<'a> {
    cfg: &'a IntegratorConfig,
    grid: GridSpec,
    spectral: Spectral,
    omega: Vec<f64>,
    mult: Multiplier,
}

impl Stepper<'_> {
    /// `-lambda phi^p`
    fn force(&self, phi: &[f64]) -> Vec<f64> {
        let mut f = self.mult.multiply(&vec![phi; self.cfg.p]);
        f.iter_mut().for_each(|v| *v *= -self.cfg.lambda);
        f
    }

    /// `-(−Laplacian + m^2) phi + force`
    fn acceleration(&self, phi: &[f64], force: &[f64]) -> Vec<f64> {
        let mut c = self.spectral.forward(phi);
        c.iter_mut()
            .zip(&self.omega)
            .for_each(|(ci, w)| *ci *= -w * w);
        let mut a = self.spectral.inverse(&c);
        a.iter_mut().zip(force).for_each(|(x, f)| *x += f);
        a
    }

    fn linear_flow(&self, phi: &mut Vec<f64>, vel: &mut Vec<f64>, h: f64) {
        let c0 = self.spectral.forward(phi);
        let c1 = self.spectral.forward(vel);
        let (u, v): (Vec<Complex64>, Vec<Complex64>) = c0
            .par_iter()
            .zip(&c1)
            .zip(&self.omega)
            .map(|((&a, &b), &w)| {
                let (s, c) = (w * h).sin_cos();
                (a * c + b * (s / w), b * c - a * (w * s))
            })
            .unzip();
        *phi = self.spectral.inverse(&u);
        *vel = self.spectral.inverse(&v);
    }
}

/// Trajectory sampled at every step, with velocity and acceleration.
pub fn integrate(
    cauchy: &CauchyData,
    cfg: &IntegratorConfig,
) -> Result<TimeSampledField, IntegratorError> {
    let grid = *cauchy.grid();
    cfg.validate(&grid)?;
    let st = Stepper {
        cfg,
        grid,
        spectral: Spectral::new(&grid),
        omega: grid.frequencies(),
        mult: Multiplier::new(grid, cfg.p, cfg.dealias),
    };
    let h = cfg.time.dt;
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let limit = cfg.divergence_factor
        * sup(cauchy.phi0.values())
            .max(sup(cauchy.phi1.values()))
            .max(1.0);

    let s = st.grid.sites();
    let n = cfg.time.samples();
    let mut values = Vec::with_capacity(n * s);
    let mut velocity = Vec::with_capacity(n * s);
    let mut acceleration = Vec::with_capacity(n * s);
    let mut phi = cauchy.phi0.values().to_vec();
    let mut vel = cauchy.phi1.values().to_vec();
    let mut force = st.force(&phi);
    for j in 0..n {
        if j > 0 {
            match cfg.scheme {
                Scheme::StrangSplitting => {
                    vel.iter_mut()
                        .zip(&force)
                        .for_each(|(v, f)| *v += 0.5 * h * f);
                    st.linear_flow(&mut phi, &mut vel, h);
                    force = st.force(&phi);
                    vel.iter_mut()
                        .zip(&force)
                        .for_each(|(v, f)| *v += 0.5 * h * f);
                }
                Scheme::Leapfrog => {
                    let a = st.acceleration(&phi, &force);
                    vel.iter_mut().zip(&a).for_each(|(v, a)| *v += 0.5 * h * a);
                    phi.iter_mut().zip(&vel).for_each(|(x, v)| *x += h * v);
                    force = st.force(&phi);
                    let a = st.acceleration(&phi, &force);
                    vel.iter_mut().zip(&a).for_each(|(v, a)| *v += 0.5 * h * a);
                }
            }
            let size = sup(&phi).max(sup(&vel));
            if size.is_nan() || size > limit {
                return Err(IntegratorError::Divergence {
                    scheme: cfg.scheme,
                    dt: h,
                    time: cfg.time.time(j),
                    size,
                });
            }
        }
        acceleration.extend(st.acceleration(&phi, &force));
        values.extend_from_slice(&phi);
        velocity.extend_from_slice(&vel);
    }
    Ok(TimeSampledField::new(grid, cfg.time, values)?
        .with_velocity(velocity)?
        .with_acceleration(acceleration)?)
}

/// `sum_sites [v^2/2 + |grad phi|^2/2 + m^2 phi^2/2 + lambda phi^(p+1)/(p+1)] dV`
/// with the gradient term evaluated spectrally.
pub fn energy(
    grid: &GridSpec,
    spectral: &Spectral,
    phi: &[f64],
    vel: &[f64],
    lambda: f64,
    p: usize,
) -> f64 {
    let c = spectral.forward(phi);
    let quadratic: f64 = c
        .iter()
        .zip(grid.frequencies())
        .map(|(ci, w)| w * w * ci.norm_sqr())
        .sum::<f64>()
        * grid.volume();
    let kinetic: f64 = vel.iter().map(|v| v * v).sum::<f64>() * grid.cell_volume();
    let potential: f64 = phi.iter().map(|x| x.powi(p as i32 + 1)).sum::<f64>() * grid.cell_volume();
    0.5 * (kinetic + quadratic) + lambda * potential / (p + 1) as f64
}

/// Energy at every sample; needs stored velocities.
pub fn energy_series(
    field: &TimeSampledField,
    lambda: f64,
    p: usize,
) -> Result<Vec<f64>, FieldError> {
    let grid = *field.grid();
    let spectral = Spectral::new(&grid);
    (0..field.samples())
        .map(|j| {
            let v = field
                .velocity_sample(j)
                .ok_or_else(|| FieldError::Shape("energy needs velocity samples".into()))?;
            Ok(energy(&grid, &spectral, field.sample(j), v, lambda, p))
        })
        .collect()
}

/// `max_t |E(t) - E(0)| / |E(0)|`.
pub fn relative_energy_drift(
    field: &TimeSampledField,
    lambda: f64,
    p: usize,
) -> Result<f64, FieldError> {
    let e = energy_series(field, lambda, p)?;
    let e0 = e[0];
    Ok(e.iter().map(|x| (x - e0).abs()).fold(0.0, f64::max) / e0.abs())
}
