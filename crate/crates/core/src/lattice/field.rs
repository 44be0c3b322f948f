use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use super::{FieldError, GridSpec};

/// Real field values on every lattice site at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSnapshot {
    grid: GridSpec,
    values: Vec<f64>,
}

impl FieldSnapshot {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.sites() {
            return Err(FieldError::Shape(format!(
                "snapshot has {} values, grid needs {}",
                values.len(),
                grid.sites()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite(format!("site {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.sites()],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self, FieldError> {
        let values = (0..grid.sites()).map(|i| f(&grid.position(i))).collect();
        Self::new(grid, values)
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

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// CSV layout: a `d,n,L,m,t` header line, its values, then one row per
    /// line along the last axis (row-major).
    pub fn write_csv<W: Write>(&self, mut out: W, time: f64) -> std::io::Result<()> {
        let g = &self.grid;
        writeln!(out, "d,n,L,m,t")?;
        writeln!(
            out,
            "{},{},{:e},{:e},{:e}",
            g.dims, g.n, g.box_len, g.mass, time
        )?;
        for row in self.values.chunks(g.n) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<(Self, f64), FieldError> {
        let mut lines = input.lines();
        let mut next = || -> Result<String, FieldError> {
            lines
                .next()
                .ok_or_else(|| FieldError::Format("unexpected end of file".into()))?
                .map_err(|e| FieldError::Format(e.to_string()))
        };
        if next()?.trim() != "d,n,L,m,t" {
            return Err(FieldError::Format("missing d,n,L,m,t header".into()));
        }
        let header = next()?;
        let h: Vec<&str> = header.trim().split(',').collect();
        if h.len() != 5 {
            return Err(FieldError::Format("header needs five entries".into()));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| FieldError::Format(format!("{s:?}: {e}")))
        };
        let dims = h[0]
            .trim()
            .parse::<usize>()
            .map_err(|e| FieldError::Format(e.to_string()))?;
        let n = h[1]
            .trim()
            .parse::<usize>()
            .map_err(|e| FieldError::Format(e.to_string()))?;
        let grid = GridSpec::new(dims, n, parse(h[2])?, parse(h[3])?)?;
        let time = parse(h[4])?;
        let mut values = Vec::with_capacity(grid.sites());
        while values.len() < grid.sites() {
            for v in next()?.trim().split(',') {
                values.push(parse(v)?);
            }
        }
        Ok((Self::new(grid, values)?, time))
    }

    /// Little-endian binary layout: `u32 d, u32 n, f64 L, f64 m, f64 t`, then
    /// the values.
    pub fn write_binary<W: Write>(&self, mut out: W, time: f64) -> std::io::Result<()> {
        let g = &self.grid;
        out.write_all(&(g.dims as u32).to_le_bytes())?;
        out.write_all(&(g.n as u32).to_le_bytes())?;
        for x in [g.box_len, g.mass, time].iter().chain(&self.values) {
            out.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<(Self, f64), FieldError> {
        let io = |e: std::io::Error| FieldError::Format(e.to_string());
        let mut u = [0u8; 4];
        let mut f = [0u8; 8];
        input.read_exact(&mut u).map_err(io)?;
        let dims = u32::from_le_bytes(u) as usize;
        input.read_exact(&mut u).map_err(io)?;
        let n = u32::from_le_bytes(u) as usize;
        let mut head = [0.0; 3];
        for h in &mut head {
            input.read_exact(&mut f).map_err(io)?;
            *h = f64::from_le_bytes(f);
        }
        let grid = GridSpec::new(dims, n, head[0], head[1])?;
        let mut values = vec![0.0; grid.sites()];
        for v in &mut values {
            input.read_exact(&mut f).map_err(io)?;
            *v = f64::from_le_bytes(f);
        }
        Ok((Self::new(grid, values)?, head[2]))
    }
}

/// Field and time derivative at `t = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyData {
    pub phi0: FieldSnapshot,
    pub phi1: FieldSnapshot,
}

impl CauchyData {
    pub fn new(phi0: FieldSnapshot, phi1: FieldSnapshot) -> Result<Self, FieldError> {
        if phi0.grid != phi1.grid {
            return Err(FieldError::Shape("Cauchy data on different grids".into()));
        }
        Ok(Self { phi0, phi1 })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            phi0: FieldSnapshot::zeros(grid),
            phi1: FieldSnapshot::zeros(grid),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.phi0.grid
    }

    pub fn is_zero(&self) -> bool {
        self.phi0.is_zero() && self.phi1.is_zero()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            phi0: self.phi0.scaled(factor),
            phi1: self.phi1.scaled(factor),
        }
    }
}

/// Uniform sample times `t_j = j dt`, `j = 0..=steps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// Requires `horizon` to be an integer multiple of `dt` (to 1e-9
    /// relative).
    pub fn new(horizon: f64, dt: f64) -> Result<Self, FieldError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(FieldError::InvalidTime(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(FieldError::InvalidTime(format!(
                "horizon_T must be positive, got {horizon}"
            )));
        }
        let ratio = horizon / dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) || steps < 1.0 {
            return Err(FieldError::InvalidTime(format!(
                "horizon_T={horizon} is not a positive integer multiple of dt={dt}"
            )));
        }
        Ok(Self {
            dt,
            steps: steps as usize,
        })
    }

    pub fn samples(&self) -> usize {
        self.steps + 1
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        self.dt * j as f64
    }
}

/// A field sampled at uniform times on `[0, T]`, optionally with its first
/// and second time derivatives at the same samples.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSampledField {
    grid: GridSpec,
    time: TimeGrid,
    values: Vec<f64>,
    velocity: Option<Vec<f64>>,
    acceleration: Option<Vec<f64>>,
}

impl TimeSampledField {
    pub fn new(grid: GridSpec, time: TimeGrid, values: Vec<f64>) -> Result<Self, FieldError> {
        let need = grid.sites() * time.samples();
        if values.len() != need {
            return Err(FieldError::Shape(format!(
                "time-sampled field has {} values, expected {need}",
                values.len()
            )));
        }
        Ok(Self {
            grid,
            time,
            values,
            velocity: None,
            acceleration: None,
        })
    }

    pub fn zeros(grid: GridSpec, time: TimeGrid) -> Self {
        let len = grid.sites() * time.samples();
        Self {
            grid,
            time,
            values: vec![0.0; len],
            velocity: Some(vec![0.0; len]),
            acceleration: Some(vec![0.0; len]),
        }
    }

    pub fn with_velocity(mut self, velocity: Vec<f64>) -> Result<Self, FieldError> {
        if velocity.len() != self.values.len() {
            return Err(FieldError::Shape(
                "velocity samples have the wrong length".into(),
            ));
        }
        self.velocity = Some(velocity);
        Ok(self)
    }

    pub fn with_acceleration(mut self, acceleration: Vec<f64>) -> Result<Self, FieldError> {
        if acceleration.len() != self.values.len() {
            return Err(FieldError::Shape(
                "acceleration samples have the wrong length".into(),
            ));
        }
        self.acceleration = Some(acceleration);
        Ok(self)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time
    }

    pub fn samples(&self) -> usize {
        self.time.samples()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn velocity(&self) -> Option<&[f64]> {
        self.velocity.as_deref()
    }

    pub fn acceleration(&self) -> Option<&[f64]> {
        self.acceleration.as_deref()
    }

    pub fn sample(&self, j: usize) -> &[f64] {
        let s = self.grid.sites();
        &self.values[j * s..(j + 1) * s]
    }

    pub fn velocity_sample(&self, j: usize) -> Option<&[f64]> {
        let s = self.grid.sites();
        self.velocity.as_ref().map(|v| &v[j * s..(j + 1) * s])
    }

    pub fn acceleration_sample(&self, j: usize) -> Option<&[f64]> {
        let s = self.grid.sites();
        self.acceleration.as_ref().map(|v| &v[j * s..(j + 1) * s])
    }

    pub fn snapshot(&self, j: usize) -> FieldSnapshot {
        FieldSnapshot {
            grid: self.grid,
            values: self.sample(j).to_vec(),
        }
    }

    pub fn same_sampling(&self, other: &Self) -> bool {
        self.grid == other.grid && self.time == other.time
    }

    pub(crate) fn check_same_sampling(&self, other: &Self) -> Result<(), FieldError> {
        if self.same_sampling(other) {
            Ok(())
        } else {
            Err(FieldError::Shape(format!(
                "fields sampled differently: {:?}/{:?} vs {:?}/{:?}",
                self.grid, self.time, other.grid, other.time
            )))
        }
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        let s = self.grid.sites();
        let bad = |v: &Vec<f64>| v.iter().position(|x| !x.is_finite());
        bad(&self.values)
            .or_else(|| self.velocity.as_ref().and_then(bad))
            .or_else(|| self.acceleration.as_ref().and_then(bad))
            .map(|i| (i % self.values.len()) / s)
    }

    /// `self + factor * other`, including whichever derivative samples both
    /// carry.
    pub fn add_scaled(&mut self, factor: f64, other: &Self) -> Result<(), FieldError> {
        self.check_same_sampling(other)?;
        axpy(&mut self.values, factor, &other.values);
        match (&mut self.velocity, &other.velocity) {
            (Some(a), Some(b)) => axpy(a, factor, b),
            (a, _) => *a = None,
        }
        match (&mut self.acceleration, &other.acceleration) {
            (Some(a), Some(b)) => axpy(a, factor, b),
            (a, _) => *a = None,
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |v: &Vec<f64>| v.iter().map(|x| x * factor).collect::<Vec<_>>();
        Self {
            grid: self.grid,
            time: self.time,
            values: scale(&self.values),
            velocity: self.velocity.as_ref().map(scale),
            acceleration: self.acceleration.as_ref().map(scale),
        }
    }

    /// Largest absolute difference over all samples and sites of the values
    /// (and velocities when both fields carry them).
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, FieldError> {
        self.check_same_sampling(other)?;
        let diff = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        };
        let mut d = diff(&self.values, &other.values);
        if let (Some(a), Some(b)) = (&self.velocity, &other.velocity) {
            d = d.max(diff(a, b));
        }
        Ok(d)
    }
}

fn axpy(acc: &mut [f64], factor: f64, x: &[f64]) {
    acc.iter_mut().zip(x).for_each(|(a, b)| *a += factor * b);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(2, 4, 3.0, 0.5).unwrap()
    }

    #[test]
    fn snapshot_validation() {
        assert!(FieldSnapshot::new(grid(), vec![0.0; 15]).is_err());
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(matches!(
            FieldSnapshot::new(grid(), v),
            Err(FieldError::NonFinite(_))
        ));
    }

    #[test]
    fn csv_and_binary_round_trip() {
        let s = FieldSnapshot::from_fn(grid(), |x| x[0] * 1.5 - x[1].sin()).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf, 0.25).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("d,n,L,m,t\n2,4,"));
        let (back, t) = FieldSnapshot::read_csv(&buf[..]).unwrap();
        assert_eq!(back, s);
        assert_eq!(t, 0.25);

        let mut bin = Vec::new();
        s.write_binary(&mut bin, 0.5).unwrap();
        assert_eq!(bin.len(), 8 + 24 + 16 * 8);
        let (back, t) = FieldSnapshot::read_binary(&bin[..]).unwrap();
        assert_eq!(back, s);
        assert_eq!(t, 0.5);
        assert!(FieldSnapshot::read_binary(&bin[..20]).is_err());
    }

    #[test]
    fn time_grid_requires_integer_multiple() {
        let t = TimeGrid::new(0.5, 1e-3).unwrap();
        assert_eq!(t.samples(), 501);
        assert!((t.horizon() - 0.5).abs() < 1e-15);
        assert!(TimeGrid::new(0.5, 0.3).is_err());
        assert!(TimeGrid::new(0.0, 0.1).is_err());
        assert!(TimeGrid::new(1.0, -0.1).is_err());
    }

    #[test]
    fn sampled_field_shape_checks() {
        let g = grid();
        let t = TimeGrid::new(1.0, 0.5).unwrap();
        assert!(TimeSampledField::new(g, t, vec![0.0; 47]).is_err());
        let a = TimeSampledField::new(g, t, vec![1.0; 48]).unwrap();
        let other =
            TimeSampledField::new(g, TimeGrid::new(1.0, 0.25).unwrap(), vec![0.0; 80]).unwrap();
        assert!(a.max_abs_diff(&other).is_err());
        let mut b = a.clone();
        b.add_scaled(2.0, &a).unwrap();
        assert_eq!(b.sample(2), &[3.0; 16]);
        assert!(b.velocity().is_none());
    }
}
