//! Least-squares slopes on log-log data.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero for two points.
    pub stderr: f64,
}

/// Fits `ln y = slope ln x + intercept`. `None` when fewer than two points
/// or any coordinate is not strictly positive.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<SlopeFit> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|&v| !(v.is_finite() && v > 0.0))
    {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if lx.len() > 2 {
        let ss: f64 = lx
            .iter()
            .zip(&ly)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (ss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(SlopeFit {
        slope,
        intercept,
        stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x = [0.5, 0.25, 0.125, 0.0625];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(3)).collect();
        let f = log_log_slope(&x, &y).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12 && f.stderr < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(log_log_slope(&[1.0], &[1.0]).is_none());
        assert!(log_log_slope(&[1.0, 2.0], &[0.0, 1.0]).is_none());
        assert!(log_log_slope(&[2.0, 2.0], &[1.0, 3.0]).is_none());
        assert!(log_log_slope(&[1.0, 2.0], &[1.0]).is_none());
    }
}
