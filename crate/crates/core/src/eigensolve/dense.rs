use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hamiltonian::{LinearOperator, SectorHamiltonian};

pub const DENSE_CUTOFF: usize = 4096;

/// All eigenvalues of a sector, ascending. Refuses sectors above `cutoff`.
pub fn dense_spectrum(h: &SectorHamiltonian, cutoff: usize) -> Result<Vec<f64>> {
    if h.dim() > cutoff {
        return Err(Error::DenseCutoff { dim: h.dim(), cutoff });
    }
    Ok(symmetric_spectrum(h.to_dense()))
}

pub fn symmetric_spectrum(m: DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}
