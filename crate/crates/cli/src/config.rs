use std::path::PathBuf;
use std::time::Duration;

use hexgap::eigensolve::{GapOptions, ProgressSink, SectorStrategy, SolverKind, DENSE_CUTOFF};
use hexgap::hamiltonian::EXPLICIT_DIM_CUTOFF;
use hexgap::spin::SpinValue;
use hexgap::AKLT_TOTAL_SPIN;
use serde::Serialize;

use crate::args::CommonArgs;
use crate::fail::CliError;

/// Validated run parameters, echoed into every JSON output.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub twice_s: u32,
    pub total_spin: u32,
    pub solver: SolverKind,
    pub strategy: SectorStrategy,
    pub tol: f64,
    pub kernel_tol: f64,
    pub seed: u64,
    pub threads: Option<usize>,
    pub max_dim: Option<usize>,
    pub dense_cutoff: usize,
    pub explicit_cutoff: usize,
    pub basis_size: usize,
    pub max_matvecs: usize,
    #[serde(skip)]
    pub cache: Option<PathBuf>,
    #[serde(skip)]
    pub checkpoint_dir: Option<PathBuf>,
    #[serde(skip)]
    pub checkpoint_interval: Duration,
    #[serde(skip)]
    pub progress: bool,
}

impl RunConfig {
    pub fn from_args(a: &CommonArgs) -> Result<Self, CliError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(CliError::Usage(format!("--{name} must be positive and finite, got {v}")))
            }
        };
        positive("tol", a.tol)?;
        positive("kernel-tol", a.kernel_tol)?;
        if a.basis_size < 8 {
            return Err(CliError::Usage(format!("--basis-size must be at least 8, got {}", a.basis_size)));
        }
        if a.threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        Ok(Self {
            twice_s: SpinValue::THREE_HALVES.twice_s(),
            total_spin: AKLT_TOTAL_SPIN,
            solver: a.solver,
            strategy: a.strategy,
            tol: a.tol,
            kernel_tol: a.kernel_tol,
            seed: a.seed,
            threads: a.threads,
            max_dim: a.max_dim.0,
            dense_cutoff: DENSE_CUTOFF,
            explicit_cutoff: EXPLICIT_DIM_CUTOFF,
            basis_size: a.basis_size,
            max_matvecs: a.max_matvecs,
            cache: a.cache.clone(),
            checkpoint_dir: a.checkpoint_dir.clone(),
            checkpoint_interval: Duration::from_secs(a.checkpoint_interval),
            progress: a.progress,
        })
    }

    pub fn spin(&self) -> SpinValue {
        SpinValue::THREE_HALVES
    }

    pub fn gap_options(&self) -> GapOptions {
        GapOptions {
            solver: self.solver,
            tol: self.tol,
            kernel_tol: self.kernel_tol,
            seed: self.seed,
            dense_cutoff: self.dense_cutoff,
            max_dim: self.max_dim,
            explicit_cutoff: self.explicit_cutoff,
            basis_size: self.basis_size,
            max_matvecs: self.max_matvecs,
            checkpoint_dir: self.checkpoint_dir.clone(),
            checkpoint_interval: self.checkpoint_interval,
            progress: self.progress.then(ProgressSink::stderr),
        }
    }
}
