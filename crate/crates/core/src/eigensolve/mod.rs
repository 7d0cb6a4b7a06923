//! Low-lying spectra of sector Hamiltonians and the spectral gap.
//!
//! The gap is the smallest eigenvalue above `kernel_tol`. With the minimal-Sz
//! strategy only the sector of smallest `|Sz|` is solved: every SU(2) multiplet
//! has a member there, so it carries every distinct eigenvalue.

pub mod dense;
pub mod lanczos;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::basis::{SectorBasis, SectorLabel};
use crate::error::{Error, Result};
use crate::hamiltonian::{assemble_with_cutoff, SectorHamiltonian, EXPLICIT_DIM_CUTOFF};
use crate::lattice::LatticeGraph;
use crate::spin::SpinValue;

pub use dense::{dense_spectrum, symmetric_spectrum, DENSE_CUTOFF};
pub use lanczos::{
    lanczos_above_floor, lanczos_distinct, lanczos_lowest, CheckpointConfig, Eigenpairs, LanczosOptions, ProgressRecord,
    ProgressSink,
};

/// A solve that did not reach its tolerance. Carries the best estimates so far.
#[derive(Clone, Debug, thiserror::Error, Serialize, Deserialize)]
#[error("solver failure ({sector:?}): {reason} after {matvecs} products and {restarts} restarts; estimates {estimates:?}, residuals {residuals:?}")]
pub struct SolverFailure {
    pub reason: String,
    pub sector: Option<SectorLabel>,
    pub estimates: Vec<f64>,
    pub residuals: Vec<f64>,
    pub matvecs: usize,
    pub restarts: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectorStrategy {
    AllSectors,
    MinimalSz,
}

impl std::str::FromStr for SectorStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all_sectors" | "all" => Ok(Self::AllSectors),
            "minimal_sz" | "minimal" => Ok(Self::MinimalSz),
            _ => Err(Error::Domain(format!("unknown sector strategy '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Lanczos,
    Dense,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lanczos" => Ok(Self::Lanczos),
            "dense" => Ok(Self::Dense),
            _ => Err(Error::Domain(format!("unknown solver '{s}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GapOptions {
    pub solver: SolverKind,
    pub tol: f64,
    pub kernel_tol: f64,
    pub seed: u64,
    pub dense_cutoff: usize,
    /// Sectors above this dimension are refused.
    pub max_dim: Option<usize>,
    pub explicit_cutoff: usize,
    pub basis_size: usize,
    pub max_matvecs: usize,
    /// Directory for per-sector checkpoints, saved every `checkpoint_interval`.
    pub checkpoint_dir: Option<PathBuf>,
    pub checkpoint_interval: Duration,
    pub progress: Option<ProgressSink>,
}

impl Default for GapOptions {
    fn default() -> Self {
        Self {
            solver: SolverKind::Lanczos,
            tol: 1e-10,
            kernel_tol: 1e-8,
            seed: 0,
            dense_cutoff: DENSE_CUTOFF,
            max_dim: None,
            explicit_cutoff: EXPLICIT_DIM_CUTOFF,
            basis_size: 64,
            max_matvecs: 200_000,
            checkpoint_dir: None,
            checkpoint_interval: Duration::from_secs(600),
            progress: None,
        }
    }
}

/// Levels resolved above the kernel in each Lanczos sector solve.
const LEVELS_ABOVE_KERNEL: usize = 1;
/// Levels listed for dense sectors when the kernel is small.
const DENSE_SHOWN: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorSpectrum {
    pub twice_total_sz: i32,
    pub dim: usize,
    pub solver: SolverKind,
    /// Lowest eigenvalues found, ascending; for Lanczos each distinct level appears once.
    pub lowest: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Smallest eigenvalue above the kernel tolerance, if the sector has one.
    pub gap: Option<f64>,
    pub kernel_dimension_estimate: usize,
    /// False when the count is a lower bound (Krylov methods see a degenerate level once).
    pub kernel_count_exact: bool,
    pub matvecs: usize,
    pub restarts: usize,
    /// Number of values resolved, kernel copies included.
    pub k: usize,
    /// Wall time; kept out of serialized results so reruns are byte-identical.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub system: String,
    pub num_sites: usize,
    pub num_edges: usize,
    pub twice_s: u32,
    pub total_spin: u32,
    pub strategy: SectorStrategy,
    pub solver: SolverKind,
    pub tol: f64,
    pub kernel_tolerance: f64,
    pub seed: u64,
    pub gap: f64,
    pub gap_sector: i32,
    pub ground_energy: f64,
    pub sectors: Vec<SectorSpectrum>,
}

impl SpectralResult {
    pub fn max_residual(&self) -> f64 {
        self.sectors.iter().flat_map(|s| s.residuals.iter().copied()).fold(0.0, f64::max)
    }
}

fn sector_values(strategy: SectorStrategy, num_sites: usize, s: SpinValue) -> Vec<i32> {
    match strategy {
        SectorStrategy::AllSectors => SectorBasis::all_twice_sz(num_sites, s),
        SectorStrategy::MinimalSz => vec![((num_sites as i64 * i64::from(s.twice_s())) % 2) as i32],
    }
}

fn build_sector(graph: &LatticeGraph, s: SpinValue, j: u32, tsz: i32, opts: &GapOptions) -> Result<SectorHamiltonian> {
    let basis = SectorBasis::new(graph.num_vertices(), s, tsz)?;
    if let Some(budget) = opts.max_dim {
        if basis.dim() > budget {
            return Err(Error::Budget { dim: basis.dim(), budget });
        }
    }
    if opts.solver == SolverKind::Dense && basis.dim() > opts.dense_cutoff {
        return Err(Error::DenseCutoff { dim: basis.dim(), cutoff: opts.dense_cutoff });
    }
    assemble_with_cutoff(graph, s, j, basis, opts.explicit_cutoff)
}

fn lanczos_options(h: &SectorHamiltonian, opts: &GapOptions, graph: &LatticeGraph) -> LanczosOptions {
    let label = h.basis().label();
    let checkpoint = opts.checkpoint_dir.as_ref().map(|dir| CheckpointConfig {
        path: dir.join(format!("{}_sz{}_seed{}.ckpt", sanitize(&graph.name), label.twice_total_sz, opts.seed)),
        interval: opts.checkpoint_interval,
        resume: true,
    });
    LanczosOptions {
        tol: opts.tol,
        seed: opts.seed,
        basis_size: opts.basis_size,
        max_matvecs: opts.max_matvecs,
        sector: Some(label),
        checkpoint,
        progress: opts.progress.clone(),
    }
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

/// Solves one sector for its low spectrum and the first level above `kernel_tol`.
pub fn solve_sector(graph: &LatticeGraph, h: &SectorHamiltonian, opts: &GapOptions) -> Result<SectorSpectrum> {
    let start = Instant::now();
    let label = h.basis().label();
    let dim = h.basis().dim();
    let mut out = match opts.solver {
        SolverKind::Dense => {
            let ev = dense_spectrum(h, opts.dense_cutoff)?;
            let kernel = ev.iter().filter(|&&x| x <= opts.kernel_tol).count();
            let gap = ev.get(kernel).copied();
            let shown = (kernel + 1).min(ev.len()).max(DENSE_SHOWN.min(ev.len()));
            SectorSpectrum {
                twice_total_sz: label.twice_total_sz,
                dim,
                solver: SolverKind::Dense,
                lowest: ev[..shown].to_vec(),
                residuals: vec![0.0; shown],
                gap,
                kernel_dimension_estimate: kernel,
                kernel_count_exact: true,
                matvecs: 0,
                restarts: 0,
                k: ev.len(),
                seconds: 0.0,
            }
        }
        SolverKind::Lanczos => {
            let found = lanczos_above_floor(h, LEVELS_ABOVE_KERNEL, opts.kernel_tol, &lanczos_options(h, opts, graph))?;
            let kernel = found.values.iter().filter(|&&x| x <= opts.kernel_tol).count();
            SectorSpectrum {
                twice_total_sz: label.twice_total_sz,
                dim,
                solver: SolverKind::Lanczos,
                gap: found.values.get(kernel).copied(),
                k: found.values.len(),
                lowest: found.values,
                residuals: found.residuals,
                kernel_dimension_estimate: kernel,
                kernel_count_exact: false,
                matvecs: found.matvecs,
                restarts: found.restarts,
                seconds: 0.0,
            }
        }
    };
    out.seconds = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Spectral gap of `sum_e w_e P^(J)_e` on `graph`.
pub fn spectral_gap(
    graph: &LatticeGraph,
    s: SpinValue,
    total_spin: u32,
    strategy: SectorStrategy,
    opts: &GapOptions,
) -> Result<SpectralResult> {
    let mut sectors = Vec::new();
    for tsz in sector_values(strategy, graph.num_vertices(), s) {
        let h = build_sector(graph, s, total_spin, tsz, opts)?;
        sectors.push(solve_sector(graph, &h, opts)?);
    }
    let ground_energy = sectors.iter().filter_map(|x| x.lowest.first().copied()).fold(f64::INFINITY, f64::min);
    let (gap, gap_sector) = sectors
        .iter()
        .filter_map(|x| x.gap.map(|g| (g, x.twice_total_sz)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::Domain(format!("{} has no eigenvalue above the kernel tolerance", graph.name)))?;
    Ok(SpectralResult {
        system: graph.name.clone(),
        num_sites: graph.num_vertices(),
        num_edges: graph.num_edges(),
        twice_s: s.twice_s(),
        total_spin,
        strategy,
        solver: opts.solver,
        tol: opts.tol,
        kernel_tolerance: opts.kernel_tol,
        seed: opts.seed,
        gap,
        gap_sector,
        ground_energy,
        sectors,
    })
}

/// Lowest eigenvalue over the minimal-Sz sector, with its residual.
pub fn ground_energy(graph: &LatticeGraph, s: SpinValue, total_spin: u32, opts: &GapOptions) -> Result<(f64, f64)> {
    let tsz = sector_values(SectorStrategy::MinimalSz, graph.num_vertices(), s)[0];
    let h = build_sector(graph, s, total_spin, tsz, opts)?;
    match opts.solver {
        SolverKind::Dense => Ok((dense_spectrum(&h, opts.dense_cutoff)?[0], 0.0)),
        SolverKind::Lanczos => {
            let found = lanczos_distinct(&h, 1, &lanczos_options(&h, opts, graph))?;
            Ok((found.values[0], found.residuals[0]))
        }
    }
}
