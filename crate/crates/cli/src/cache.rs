//! Results cache: one JSON file per content hash of the computation inputs.

use std::fs;
use std::path::{Path, PathBuf};

use hexgap::eigensolve::SpectralResult;
use hexgap::lattice::LatticeGraph;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::fail::CliError;

const VERSION: &str = "hexgap-cache-v1";

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    system: String,
    result: SpectralResult,
}

/// Hash of everything that determines a result bit for bit.
pub fn cache_key(graph: &LatticeGraph, cfg: &RunConfig) -> String {
    let mut h = Sha256::new();
    let fields = [
        VERSION.to_string(),
        format!("twice_s={}", cfg.twice_s),
        format!("total_spin={}", cfg.total_spin),
        format!("solver={:?}", cfg.solver),
        format!("strategy={:?}", cfg.strategy),
        format!("tol={:e}", cfg.tol),
        format!("kernel_tol={:e}", cfg.kernel_tol),
        format!("seed={}", cfg.seed),
        format!("basis_size={}", cfg.basis_size),
        format!("explicit_cutoff={}", cfg.explicit_cutoff),
    ];
    for f in &fields {
        h.update(f.as_bytes());
        h.update(b"\n");
    }
    h.update(graph.to_edge_list().as_bytes());
    hex::encode(h.finalize())
}

pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn new(dir: Option<&Path>) -> Self {
        Self { dir: dir.map(Path::to_path_buf) }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    /// A stored result, if present and readable. Unreadable entries are ignored.
    pub fn load(&self, key: &str) -> Option<SpectralResult> {
        let text = fs::read_to_string(self.path(key)?).ok()?;
        let entry: Entry = serde_json::from_str(&text).ok()?;
        (entry.key == key).then_some(entry.result)
    }

    pub fn store(&self, key: &str, result: &SpectralResult) -> Result<(), CliError> {
        let (Some(dir), Some(path)) = (self.dir.as_ref(), self.path(key)) else {
            return Ok(());
        };
        fs::create_dir_all(dir).map_err(CliError::file(dir))?;
        let entry = Entry { key: key.to_string(), system: result.system.clone(), result: result.clone() };
        let text = serde_json::to_string_pretty(&entry).expect("results serialize");
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, text).map_err(CliError::file(&tmp))?;
        fs::rename(&tmp, &path).map_err(CliError::file(&path))
    }
}
