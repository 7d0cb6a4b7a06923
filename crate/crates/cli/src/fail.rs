use std::path::PathBuf;

use hexgap::Error;
use serde_json::{json, Value};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_REFUSED: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    /// Several systems could not be obtained; each entry is `(system, error)`.
    #[error("incomplete gap data: {}", .0.iter().map(|(s, e)| format!("{s}: {e}")).collect::<Vec<_>>().join("; "))]
    Missing(Vec<(String, CliError)>),
}

impl CliError {
    pub fn file(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::File { path, source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::File { .. } => EXIT_USAGE,
            CliError::Core(e) => match e {
                Error::Domain(_) | Error::Structure(_) | Error::DimensionMismatch { .. } | Error::Io(_) => EXIT_USAGE,
                Error::Solver(_) | Error::Checkpoint(_) => EXIT_SOLVER,
                Error::Budget { .. } | Error::DenseCutoff { .. } | Error::Incomplete(_) => EXIT_REFUSED,
            },
            CliError::Missing(parts) => {
                if parts.iter().any(|(_, e)| e.exit_code() == EXIT_SOLVER) {
                    EXIT_SOLVER
                } else {
                    EXIT_REFUSED
                }
            }
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::File { .. } => "file",
            CliError::Core(e) => match e {
                Error::Domain(_) => "domain",
                Error::Structure(_) => "structure",
                Error::DimensionMismatch { .. } => "dimension_mismatch",
                Error::DenseCutoff { .. } => "dense_cutoff",
                Error::Budget { .. } => "budget",
                Error::Solver(_) => "solver_failure",
                Error::Incomplete(_) => "incomplete",
                Error::Checkpoint(_) => "checkpoint",
                Error::Io(_) => "io",
            },
            CliError::Missing(_) => "incomplete",
        }
    }

    fn details(&self) -> Value {
        match self {
            CliError::Core(Error::Solver(f)) => serde_json::to_value(f).unwrap_or(Value::Null),
            CliError::Core(Error::Budget { dim, budget }) => json!({ "dim": dim, "budget": budget }),
            CliError::Core(Error::DenseCutoff { dim, cutoff }) => json!({ "dim": dim, "cutoff": cutoff }),
            CliError::Missing(parts) => {
                Value::Array(parts.iter().map(|(system, e)| json!({ "system": system, "error": e.to_json() })).collect())
            }
            _ => Value::Null,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
            "details": self.details(),
        })
    }

    /// Machine-readable error on stderr.
    pub fn report(&self) {
        eprintln!("{}", self.to_json());
    }
}
