//! Built-in families of initial data.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FieldError, FieldSnapshot, GridSpec};

/// Named initial-data family, written as `kind[:key=value,...]`:
///
/// * `zero`
/// * `gaussian:amp=1,width=0.5` (centered in the box, periodic distance)
/// * `mode:j=1,amp=1,phase=0` (`amp cos(2 pi j x0 / L + phase)`)
/// * `random:seed=7,band=2,amp=1` (band-limited, RMS amplitude `amp`)
#[derive(Clone, Debug, PartialEq)]
pub enum InitialProfile {
    Zero,
    Gaussian { amp: f64, width: f64 },
    Mode { j: i64, amp: f64, phase: f64 },
    Random { seed: u64, band: usize, amp: f64 },
}

impl InitialProfile {
    pub fn sample(&self, grid: &GridSpec) -> Result<FieldSnapshot, FieldError> {
        let l = grid.box_len;
        match *self {
            InitialProfile::Zero => Ok(FieldSnapshot::zeros(*grid)),
            InitialProfile::Gaussian { amp, width } => FieldSnapshot::from_fn(*grid, |x| {
                let r2: f64 = x
                    .iter()
                    .map(|&xi| {
                        let d = (xi - 0.5 * l).rem_euclid(l);
                        let d = d.min(l - d);
                        d * d
                    })
                    .sum();
                amp * (-r2 / (2.0 * width * width)).exp()
            }),
            InitialProfile::Mode { j, amp, phase } => FieldSnapshot::from_fn(*grid, |x| {
                amp * (2.0 * PI * j as f64 * x[0] / l + phase).cos()
            }),
            InitialProfile::Random { seed, band, amp } => {
                let f = random_band_limited(grid, seed, band);
                Ok(f.scaled(amp))
            }
        }
    }
}

/// Band-limited field with unit RMS value: random amplitudes on every mode
/// with `|j_axis| <= band`.
pub fn random_band_limited(grid: &GridSpec, seed: u64, band: usize) -> FieldSnapshot {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let band = band.min(grid.n / 2 - 1) as i64;
    let width = (2 * band + 1) as usize;
    let mut terms: Vec<([i64; 3], f64, f64)> = Vec::new();
    for flat in 0..width.pow(grid.dims as u32) {
        let mut j = [0i64; 3];
        let mut rest = flat;
        for a in (0..grid.dims).rev() {
            j[a] = (rest % width) as i64 - band;
            rest /= width;
        }
        // one representative of each +-j pair
        let first = j.iter().take(grid.dims).find(|&&v| v != 0);
        if matches!(first, Some(&v) if v < 0) {
            continue;
        }
        let a: f64 = rng.random_range(-1.0..1.0);
        let b: f64 = if first.is_none() {
            0.0
        } else {
            rng.random_range(-1.0..1.0)
        };
        terms.push((j, a, b));
    }
    let l = grid.box_len;
    let mut values: Vec<f64> = (0..grid.sites())
        .map(|i| {
            let x = grid.position(i);
            terms
                .iter()
                .map(|(j, a, b)| {
                    let phase: f64 = (0..grid.dims)
                        .map(|ax| 2.0 * PI * j[ax] as f64 * x[ax] / l)
                        .sum();
                    a * phase.cos() + b * phase.sin()
                })
                .sum()
        })
        .collect();
    let rms = (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt();
    if rms > 0.0 {
        values.iter_mut().for_each(|v| *v /= rms);
    }
    FieldSnapshot::new(*grid, values).expect("finite")
}

impl FromStr for InitialProfile {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = std::collections::BTreeMap::new();
        for part in args.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| FieldError::Format(format!("expected key=value in {part:?}")))?;
            kv.insert(k.trim().to_owned(), v.trim().to_owned());
        }
        let mut take = |key: &str, default: f64| -> Result<f64, FieldError> {
            match kv.remove(key) {
                None => Ok(default),
                Some(v) => v
                    .parse::<f64>()
                    .map_err(|_| FieldError::Format(format!("{key}={v} is not a number"))),
            }
        };
        let profile = match kind.trim() {
            "zero" => InitialProfile::Zero,
            "gaussian" => InitialProfile::Gaussian {
                amp: take("amp", 1.0)?,
                width: take("width", 0.5)?,
            },
            "mode" => InitialProfile::Mode {
                j: take("j", 1.0)? as i64,
                amp: take("amp", 1.0)?,
                phase: take("phase", 0.0)?,
            },
            "random" => InitialProfile::Random {
                seed: take("seed", 0.0)? as u64,
                band: take("band", 2.0)? as usize,
                amp: take("amp", 1.0)?,
            },
            other => {
                return Err(FieldError::Format(format!(
                    "unknown initial-data family {other:?}"
                )))
            }
        };
        if let Some(k) = kv.keys().next() {
            return Err(FieldError::Format(format!("unknown key {k:?} for {kind}")));
        }
        if let InitialProfile::Gaussian { width, .. } = profile {
            if width.is_nan() || width <= 0.0 {
                return Err(FieldError::Format("gaussian width must be positive".into()));
            }
        }
        Ok(profile)
    }
}

impl fmt::Display for InitialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialProfile::Zero => write!(f, "zero"),
            InitialProfile::Gaussian { amp, width } => {
                write!(f, "gaussian:amp={amp},width={width}")
            }
            InitialProfile::Mode { j, amp, phase } => {
                write!(f, "mode:j={j},amp={amp},phase={phase}")
            }
            InitialProfile::Random { seed, band, amp } => {
                write!(f, "random:seed={seed},band={band},amp={amp}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Spectral;

    #[test]
    fn parse_and_display() {
        let p: InitialProfile = "random:seed=3,band=2,amp=0.5".parse().unwrap();
        assert_eq!(
            p,
            InitialProfile::Random {
                seed: 3,
                band: 2,
                amp: 0.5
            }
        );
        assert_eq!(p.to_string().parse::<InitialProfile>().unwrap(), p);
        assert_eq!(
            "zero".parse::<InitialProfile>().unwrap(),
            InitialProfile::Zero
        );
        assert!("bump".parse::<InitialProfile>().is_err());
        assert!("mode:k=1".parse::<InitialProfile>().is_err());
        assert!("gaussian:width=0".parse::<InitialProfile>().is_err());
    }

    #[test]
    fn random_data_is_band_limited_and_reproducible() {
        let g = GridSpec::new(1, 32, 2.0 * PI, 1.0).unwrap();
        let a = random_band_limited(&g, 11, 3);
        assert_eq!(a, random_band_limited(&g, 11, 3));
        assert_ne!(a, random_band_limited(&g, 12, 3));
        let c = Spectral::new(&g).forward(a.values());
        for (i, ci) in c.iter().enumerate() {
            if g.frequency_index(i).abs() > 3 {
                assert!(ci.norm() < 1e-13);
            }
        }
        let rms = (a.values().iter().map(|v| v * v).sum::<f64>() / 32.0).sqrt();
        assert!((rms - 1.0).abs() < 1e-12);
    }
}
