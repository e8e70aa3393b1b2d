use std::path::Path;

use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: {msg}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("{path}: unsupported format version {found}")]
    SchemaVersionUnsupported { path: String, found: u32 },

    /// The input describes no valid space or problem.
    #[error("validation failed: {0}")]
    ValidationFailed(mrws_core::Error),

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] mrws_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("usage: {0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn from_build(e: mrws_core::Error) -> Self {
        use mrws_core::Error as E;
        match e {
            E::NotStochastic { .. }
            | E::AsymmetricWeights(..)
            | E::IsolatedState(_)
            | E::NoStationaryMeasure(_)
            | E::NotReversible(_)
            | E::BoundaryMismatch { .. }
            | E::EmptyBoundary
            | E::EmptyDomain => CliError::ValidationFailed(e),
            E::InvalidParameter(msg) => CliError::Invalid(msg),
            other => CliError::Core(other),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ValidationFailed(_) => 2,
            _ => 1,
        }
    }
}
