use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hexgap::eigensolve::{SectorStrategy, SolverKind};

/// Default sector-dimension budget. Covers C(K) up to K = 12 and the sun;
/// the 13- and 14-site sectors need `--max-dim none`.
pub const DEFAULT_MAX_DIM: usize = 2_000_000;

#[derive(Debug, Parser)]
#[command(name = "hexgap", version, about = "Spectral gaps and finite-size certificates for the spin-3/2 AKLT model")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Eigensolver: lanczos or dense.
    #[arg(long, global = true, default_value = "lanczos")]
    pub solver: SolverKind,
    /// Sector strategy: minimal_sz or all_sectors.
    #[arg(long, global = true, default_value = "minimal_sz")]
    pub strategy: SectorStrategy,
    /// Residual tolerance for every reported eigenvalue.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Eigenvalues at or below this count as ground states.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub kernel_tol: f64,
    /// Seed of the Lanczos start vector.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Largest sector dimension to attempt, or `none`.
    #[arg(long, global = true, default_value_t = Budget(Some(DEFAULT_MAX_DIM)))]
    pub max_dim: Budget,
    /// Lanczos basis size between thick restarts.
    #[arg(long, global = true, default_value_t = 64)]
    pub basis_size: usize,
    /// Matrix-vector product limit per sector.
    #[arg(long, global = true, default_value_t = 200_000)]
    pub max_matvecs: usize,
    /// Results cache directory.
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    /// Write JSON output here (`-` for stdout, replacing the text report).
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
    /// Write CSV output here (table only).
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Stream solver progress as JSON lines on stderr.
    #[arg(long, global = true)]
    pub progress: bool,
    /// Save Lanczos checkpoints in this directory and resume from them.
    #[arg(long, global = true)]
    pub checkpoint_dir: Option<PathBuf>,
    /// Seconds between checkpoints.
    #[arg(long, global = true, default_value_t = 600)]
    pub checkpoint_interval: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget(pub Option<usize>);

impl std::fmt::Display for Budget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            Some(d) => write!(f, "{d}"),
            None => f.write_str("none"),
        }
    }
}

impl FromStr for Budget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" | "unlimited" => Ok(Budget(None)),
            _ => s.replace('_', "").parse().map(|d| Budget(Some(d))).map_err(|e| format!("{e}")),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral gap of one system.
    Gap(SystemArgs),
    /// Rebuild a gap table: 1 for A and B, 2 for C(K).
    Table {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=2))]
        which: u8,
        /// Rows of table 2 (default 5,10,11,12,13,14).
        #[arg(long = "K", value_delimiter = ',')]
        k: Option<Vec<usize>>,
    },
    /// Apply a finite-size criterion.
    Certify {
        #[command(subcommand)]
        target: CertifyTarget,
    },
    /// Edge and edge-pair coverage audits over the periodic chain.
    Audit {
        /// Chain length in hexagons.
        #[arg(long)]
        n: usize,
        /// Even subsystem length, at least 4.
        #[arg(long = "K")]
        k: usize,
    },
    /// Write an edge list, a sector matrix or the local projector.
    Export {
        #[command(subcommand)]
        what: ExportTarget,
    },
}

#[derive(Debug, Subcommand)]
pub enum CertifyTarget {
    /// Chain criterion from the gaps of A, B and C(K).
    Chain {
        /// Even subsystem length, at least 4.
        #[arg(long = "K")]
        k: usize,
        #[command(flatten)]
        gaps: GapSources,
    },
    /// Weighted criterion for the hexagonal sun.
    Sun {
        /// Weight of the inner hexagon edges, at least 1.
        #[arg(long)]
        a: f64,
        #[command(flatten)]
        gaps: GapSources,
    },
}

#[derive(Debug, Clone, Args)]
pub struct GapSources {
    /// Supply a gap instead of computing it, e.g. `A=0.168` (repeatable).
    #[arg(long = "gap", value_name = "SYSTEM=VALUE")]
    pub overrides: Vec<String>,
    /// JSON object of supplied gaps, keyed by system name.
    #[arg(long)]
    pub gaps_file: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ExportTarget {
    /// Edge list: `x1 y1 x2 y2 weight class` per line.
    Edges {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One magnetization sector of the Hamiltonian in Matrix Market format.
    Mtx {
        #[command(flatten)]
        system: SystemArgs,
        /// Twice the total Sz (default: the minimal sector).
        #[arg(long, allow_hyphen_values = true)]
        sector: Option<i32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The two-site projector onto total spin J in Matrix Market format.
    Projector {
        #[arg(long, default_value_t = 3)]
        total_spin: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SystemKind {
    #[value(name = "A")]
    A,
    #[value(name = "B")]
    B,
    #[value(name = "C")]
    C,
    #[value(name = "C_tilde", alias = "Ct")]
    CTilde,
    #[value(name = "sun")]
    Sun,
    #[value(name = "chain")]
    Chain,
}

#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    #[arg(long)]
    pub system: SystemKind,
    /// Length of a C system.
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Number of hexagons of the periodic chain.
    #[arg(long)]
    pub n: Option<usize>,
    /// Inner-edge weight of the sun.
    #[arg(long)]
    pub a: Option<f64>,
}
