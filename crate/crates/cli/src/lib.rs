//! Experiment runner: flat configs in, JSON reports and CSV tables out.

pub mod classical;
pub mod config;
pub mod error;
pub mod output;
pub mod quantum;
pub mod sweep;
pub mod trees;

pub use error::CliError;

/// Bumped whenever a JSON or CSV layout changes.
pub const SCHEMA_VERSION: u32 = 1;
