//! Binary checkpoints for long eigensolver runs.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic          8 bytes  "HXGAPCK1"
//! version        u32      1
//! dim            u64      vector length
//! num_sites      u32
//! twice_s        u32
//! twice_total_sz i32
//! seed           u64
//! matvecs        u64      products applied so far
//! restarts       u64
//! n_scalars      u32
//! n_vectors      u32
//! scalars        n_scalars x f64
//! vectors        n_vectors x dim x f64
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::basis::SectorLabel;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"HXGAPCK1";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub sector: SectorLabel,
    pub seed: u64,
    pub matvecs: u64,
    pub restarts: u64,
    pub scalars: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl Checkpoint {
    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let dim = self.dim();
        if self.vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::Checkpoint("vectors of unequal length".into()));
        }
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(dim as u64).to_le_bytes())?;
        w.write_all(&(self.sector.num_sites as u32).to_le_bytes())?;
        w.write_all(&self.sector.twice_s.to_le_bytes())?;
        w.write_all(&self.sector.twice_total_sz.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.matvecs.to_le_bytes())?;
        w.write_all(&self.restarts.to_le_bytes())?;
        w.write_all(&(self.scalars.len() as u32).to_le_bytes())?;
        w.write_all(&(self.vectors.len() as u32).to_le_bytes())?;
        for x in self.scalars.iter().chain(self.vectors.iter().flatten()) {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let dim = read_u64(&mut r)? as usize;
        let num_sites = read_u32(&mut r)? as usize;
        let twice_s = read_u32(&mut r)?;
        let twice_total_sz = read_u32(&mut r)? as i32;
        let seed = read_u64(&mut r)?;
        let matvecs = read_u64(&mut r)?;
        let restarts = read_u64(&mut r)?;
        let n_scalars = read_u32(&mut r)? as usize;
        let n_vectors = read_u32(&mut r)? as usize;
        let scalars = read_f64s(&mut r, n_scalars)?;
        let vectors = (0..n_vectors).map(|_| read_f64s(&mut r, dim)).collect::<Result<_>>()?;
        Ok(Self { sector: SectorLabel { num_sites, twice_s, twice_total_sz }, seed, matvecs, restarts, scalars, vectors })
    }

    /// Writes to a sibling temporary file and renames it over `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            self.write_to(&mut w)?;
            w.flush()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut b = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut b)?;
        out.push(f64::from_le_bytes(b));
    }
    Ok(out)
}
