use thiserror::Error;

/// Errors raised by model construction and numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("structural error: {0}")]
    Structure(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sector dimension {dim} exceeds the dense cutoff {cutoff}")]
    DenseCutoff { dim: usize, cutoff: usize },

    #[error("sector dimension {dim} exceeds the budget {budget}")]
    Budget { dim: usize, budget: usize },

    #[error(transparent)]
    Solver(#[from] crate::eigensolve::SolverFailure),

    #[error("incomplete input: {0}")]
    Incomplete(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
