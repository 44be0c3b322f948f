use kgseries::butcher::SeriesError;
use kgseries::lattice::FieldError;
use kgseries::quantum::QuantumError;
use kgseries::reference::IntegratorError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("numerical divergence: {0}")]
    Divergence(String),
    #[error("Fock cutoff too small: {0}")]
    Truncation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

/// Machine-readable error record written to stderr.
#[derive(Serialize)]
pub struct ErrorRecord<'a> {
    pub schema_version: u32,
    pub category: &'a str,
    pub exit_code: u8,
    pub messages: Vec<String>,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(vec![msg.into()])
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Divergence(_) => "divergence",
            CliError::Truncation(_) => "truncation",
            CliError::Io(_) => "io",
            CliError::Other(_) => "other",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Truncation(_) => 4,
            CliError::Io(_) | CliError::Other(_) => 1,
        }
    }

    pub fn record(&self) -> ErrorRecord<'_> {
        let messages = match self {
            CliError::Config(list) => list.clone(),
            other => vec![other.to_string()],
        };
        ErrorRecord {
            schema_version: crate::SCHEMA_VERSION,
            category: self.category(),
            exit_code: self.exit_code(),
            messages,
        }
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        match e {
            FieldError::NonFinite(msg) => CliError::Divergence(msg),
            FieldError::InvalidGrid(_) | FieldError::InvalidTime(_) | FieldError::Format(_) => {
                CliError::config(e.to_string())
            }
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<SeriesError> for CliError {
    fn from(e: SeriesError) -> Self {
        match e {
            SeriesError::Config(list) => CliError::Config(list),
            SeriesError::Field(f) => f.into(),
            SeriesError::Order { .. } => CliError::config(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<IntegratorError> for CliError {
    fn from(e: IntegratorError) -> Self {
        match e {
            IntegratorError::Config(list) => CliError::Config(list),
            IntegratorError::Divergence { .. } => CliError::Divergence(e.to_string()),
            IntegratorError::Field(f) => f.into(),
        }
    }
}

impl From<QuantumError> for CliError {
    fn from(e: QuantumError) -> Self {
        match e {
            QuantumError::Config(list) => CliError::Config(list),
            QuantumError::Truncation { .. } => CliError::Truncation(e.to_string()),
            QuantumError::Time { .. } | QuantumError::Quadrature { .. } => {
                CliError::config(e.to_string())
            }
            QuantumError::Range(msg) => CliError::Other(msg),
        }
    }
}
