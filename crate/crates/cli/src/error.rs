use std::path::PathBuf;

use barw_core::BarwError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cache file {path} does not match: {reason}; remove it to recompute")]
    StaleCache { path: PathBuf, reason: String },

    #[error(transparent)]
    Core(#[from] BarwError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("serializing summary: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit status: 2 invalid config, 3 solver failure, 4 simulation
    /// truncation, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                BarwError::Domain(_) | BarwError::Precondition(_) => 2,
                BarwError::SolverFailure { .. }
                | BarwError::Inconsistent { .. }
                | BarwError::Overflow { .. }
                | BarwError::Singular { .. } => 3,
                BarwError::Truncated { .. } => 4,
                BarwError::Parse { .. } | BarwError::Io(_) => 1,
            },
            CliError::StaleCache { .. } | CliError::Io { .. } | CliError::Json(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
