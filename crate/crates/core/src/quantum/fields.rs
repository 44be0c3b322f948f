use num_complex::Complex64;
use rayon::prelude::*;

use super::{FockSpace, ModeOperator, QuantumError, QuantumLatticeSpec};

/// `phi_I(t, x) = sum_k (a_k e^{-i theta} + a_k^dag e^{i theta}) / sqrt(2 w_k V)`
/// with `theta = w_k (t - t0) - k x`.
pub fn free_field_op(
    spec: &QuantumLatticeSpec,
    t: f64,
    x: f64,
) -> Result<ModeOperator, QuantumError> {
    let space = spec.space()?;
    if t < spec.t0 {
        return Err(QuantumError::Time { t, t0: spec.t0 });
    }
    Ok(field_unchecked(spec, &space, t, x))
}

pub(crate) fn field_unchecked(
    spec: &QuantumLatticeSpec,
    space: &FockSpace,
    t: f64,
    x: f64,
) -> ModeOperator {
    let mut out = space.zero();
    for (slot, (_, k, w)) in spec.mode_table().into_iter().enumerate() {
        let a = space.annihilate(slot).expect("slot in range");
        let amp = 1.0 / (2.0 * w * spec.volume()).sqrt();
        let phase = Complex64::from_polar(amp, -(w * (t - spec.t0) - k * x));
        out.add_scaled(phase, &a);
        out.add_scaled(phase.conj(), &a.adjoint());
    }
    out
}

/// `Delta(z) = [phi_I(x), phi_I(y)]` at `z = x - y` for the retained modes:
/// `sum_k (e^{-i k.z} - e^{i k.z}) / (2 w_k V)` with `k.z = w_k z0 - k z`.
pub fn pauli_jordan(spec: &QuantumLatticeSpec, z0: f64, z: f64) -> Complex64 {
    spec.mode_table()
        .into_iter()
        .map(|(_, k, w)| Complex64::new(0.0, -(w * z0 - k * z).sin() / (w * spec.volume())))
        .sum()
}

/// Quadrature nodes `tau_i = t0 + i dtau`, `i = 0..=J`, times a uniform grid
/// of `n_y` points in space, with the free field at every node.
///
/// Every tree operator is a function of position with modes `|j| <= j_max`,
/// so the integrands below carry modes up to `(p+1) j_max` and
/// `n_y = (p+1) j_max + 1` points integrate them exactly.
#[derive(Clone, Debug)]
pub struct NodeGrid {
    pub spec: QuantumLatticeSpec,
    pub space: FockSpace,
    pub p: usize,
    pub t: f64,
    pub dtau: f64,
    pub times: Vec<f64>,
    pub points: Vec<f64>,
    /// `free[i][s] = phi_I(tau_i, y_s)`
    pub free: Vec<Vec<ModeOperator>>,
}

impl NodeGrid {
    pub fn new(
        spec: &QuantumLatticeSpec,
        p: usize,
        t: f64,
        dtau: f64,
    ) -> Result<Self, QuantumError> {
        let space = spec.space()?;
        if p < 2 {
            return Err(QuantumError::Config(vec![format!(
                "p must be >= 2, got {p}"
            )]));
        }
        if t < spec.t0 {
            return Err(QuantumError::Time { t, t0: spec.t0 });
        }
        let span = t - spec.t0;
        let ratio = span / dtau;
        if dtau.is_nan() || dtau <= 0.0 || (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(QuantumError::Quadrature { dtau, span });
        }
        let steps = ratio.round() as usize;
        let times: Vec<f64> = (0..=steps).map(|i| spec.t0 + i as f64 * dtau).collect();
        let n_y = (p as i64 + 1) as usize * spec.j_max() as usize + 1;
        let points: Vec<f64> = (0..n_y)
            .map(|s| s as f64 * spec.box_len / n_y as f64)
            .collect();
        let free = times
            .par_iter()
            .map(|&tau| {
                points
                    .iter()
                    .map(|&y| field_unchecked(spec, &space, tau, y))
                    .collect()
            })
            .collect();
        Ok(Self {
            spec: spec.clone(),
            space,
            p,
            t,
            dtau,
            times,
            points,
            free,
        })
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn cell_volume(&self) -> f64 {
        self.spec.box_len / self.points.len() as f64
    }
}
