//! Classical scalar fields on a periodic lattice `[0, L)^d`.

mod evolve;
mod field;
mod grid;
mod initial;
mod norms;
mod product;
mod spectral;

pub use evolve::{
    free_evolve, free_field, klein_gordon_spatial, retarded_kernel, solve_retarded, FreeState,
};
pub use field::{CauchyData, FieldSnapshot, TimeGrid, TimeSampledField};
pub use grid::{dispersion, GridSpec};
pub use initial::{random_band_limited, InitialProfile};
pub use norms::{
    algebra_constant_family, estimate_algebra_constant, max_sobolev_distance, sobolev_norm,
    time_derivatives, triple_norm, AlgebraConstant, NormKernel,
};
pub use product::{padded_size, pointwise_product, Multiplier};
pub use spectral::Spectral;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite values: {0}")]
    NonFinite(String),
    #[error("malformed field data: {0}")]
    Format(String),
    #[error("invalid time grid: {0}")]
    InvalidTime(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
}
