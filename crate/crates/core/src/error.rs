use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = BarwError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BarwError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A bound or check was requested whose preconditions do not hold.
    #[error("precondition not met: {0}")]
    Precondition(String),

    /// The hitting-probability solve did not reach the harmonicity tolerance.
    #[error("solver failed to converge: residual {residual:e} exceeds tolerance {tolerance:e}")]
    SolverFailure { residual: f64, tolerance: f64 },

    /// A tilted kernel row drifted too far from unit mass.
    #[error("inconsistent tilted kernel: row {row} sums to 1{deviation:+e}")]
    Inconsistent { row: usize, deviation: f64 },

    /// Native floating point overflowed while solving for expected times.
    #[error("overflow in expected-time solve at state {state}")]
    Overflow { state: usize },

    #[error("singular system at pivot {pivot}")]
    Singular { pivot: usize },

    /// A Monte Carlo trial hit the internal step cap.
    #[error("trial {trial} truncated after {steps} steps")]
    Truncated { trial: u64, steps: u64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BarwError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        BarwError::Domain(msg.into())
    }
}
