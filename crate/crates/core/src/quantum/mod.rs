//! The quantized series on a finite-mode, occupation-truncated Fock space.
//!
//! Retained wavevectors are `k_j = 2 pi j / L` for `|j| <= (M-1)/2` in one
//! space dimension, each mode truncated to occupations `0..=n_max`. Identities
//! are compared only on a [`SafeSubspace`] where the truncation is invisible.

mod fields;
mod fock;
mod series;
mod verify;

use serde::Serialize;
use thiserror::Error;

pub use fields::{free_field_op, pauli_jordan, NodeGrid};
pub use fock::{FockSpace, ModeOperator, SafeSubspace};
pub use series::{
    dyson_components, dyson_u, heisenberg_components, interaction_hamiltonian, tree_operator,
    DysonSign, TreeOperators,
};
pub use verify::{
    commutator_check, field_identity_check, field_identity_shortcut, unitarity_check,
    unitarity_components, FieldIdentityReport, RefinementLevel, UnitarityReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("invalid quantum configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("mode out of range: {0}")]
    Range(String),
    #[error("evaluation time {t} precedes the reference time t0={t0}")]
    Time { t: f64, t0: f64 },
    #[error("{factors} field factors need occupations up to {needed} above the safe level, but n_max={n_max}")]
    Truncation {
        factors: usize,
        n_max: usize,
        needed: usize,
    },
    #[error("quadrature step {dtau} does not divide t - t0 = {span}")]
    Quadrature { dtau: f64, span: f64 },
}

/// Finite-mode quantization parameters.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantumLatticeSpec {
    pub dims: usize,
    /// Number of retained wavevectors; odd, so the set is symmetric.
    pub modes: usize,
    pub n_max: usize,
    pub box_len: f64,
    pub mass: f64,
    pub t0: f64,
}

impl QuantumLatticeSpec {
    pub fn validate(&self) -> Result<(), QuantumError> {
        let mut bad = Vec::new();
        if self.dims != 1 {
            bad.push(format!(
                "dims must be 1 for the quantum module, got {}",
                self.dims
            ));
        }
        if self.modes == 0 || self.modes.is_multiple_of(2) {
            bad.push(format!(
                "modes must be odd and positive, got {}",
                self.modes
            ));
        }
        if self.n_max == 0 {
            bad.push("nmax must be at least 1".to_owned());
        }
        if !(self.box_len.is_finite() && self.box_len > 0.0) {
            bad.push(format!("box_L must be positive, got {}", self.box_len));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            bad.push(format!("mass must be positive, got {}", self.mass));
        }
        if !self.t0.is_finite() {
            bad.push(format!("t0 must be finite, got {}", self.t0));
        }
        if bad.is_empty() {
            FockSpace::new(self.modes, self.n_max).map(|_| ())
        } else {
            Err(QuantumError::Config(bad))
        }
    }

    pub fn space(&self) -> Result<FockSpace, QuantumError> {
        self.validate()?;
        FockSpace::new(self.modes, self.n_max)
    }

    pub fn volume(&self) -> f64 {
        self.box_len.powi(self.dims as i32)
    }

    /// Largest retained `|j|`.
    pub fn j_max(&self) -> i64 {
        (self.modes as i64 - 1) / 2
    }

    /// `(j, k_j, w_j)` for every retained mode in Fock slot order.
    pub fn mode_table(&self) -> Vec<(i64, f64, f64)> {
        (-self.j_max()..=self.j_max())
            .map(|j| {
                let k = 2.0 * std::f64::consts::PI * j as f64 / self.box_len;
                (j, k, crate::lattice::dispersion(self.mass, k * k))
            })
            .collect()
    }

    /// Wavevectors as used by the lattice retarded kernel.
    pub fn wavevectors(&self) -> Vec<Vec<f64>> {
        self.mode_table()
            .into_iter()
            .map(|(_, k, _)| vec![k])
            .collect()
    }
}
