//! Sector-restricted Hamiltonians `H = sum_e w_e P_e`.
//!
//! Matrix-vector products use a gather formulation: output entry `i` is
//! accumulated from the configurations reachable from `states[i]` by a single
//! pair term, in a fixed order (terms in edge order, then local transitions in
//! ascending local index). Each output entry therefore has exactly one
//! summation order, independent of how rows are split across threads.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::basis::SectorBasis;
use crate::error::{Error, Result};
use crate::lattice::LatticeGraph;
use crate::spin::{spin_projector, LocalOperator, SpinValue};

/// Sectors at or above this dimension are applied matrix-free.
pub const EXPLICIT_DIM_CUTOFF: usize = 1_000_000;

const ROW_CHUNK: usize = 1 << 12;

/// A real symmetric operator that can be applied to vectors.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// Writes `A x` into `y`; both slices have length `dim()`.
    fn apply_into(&self, x: &[f64], y: &mut [f64]);
}

/// Compressed sparse rows with merged duplicate entries.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().map(|&c| c as usize).zip(self.vals[range].iter().copied())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_chunks_mut(ROW_CHUNK).enumerate().for_each(|(chunk, out)| {
            let base = chunk * ROW_CHUNK;
            for (k, slot) in out.iter_mut().enumerate() {
                *slot = self.row(base + k).map(|(j, v)| v * x[j]).sum();
            }
        });
    }
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, slot) in y.iter_mut().enumerate() {
            *slot = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// One pair term with precomputed bit positions.
#[derive(Clone, Debug)]
struct PairTerm {
    sites: (usize, usize),
    weight: f64,
    shift_a: u32,
    shift_b: u32,
    clear: u32,
}

#[derive(Clone, Debug)]
pub enum Storage {
    MatrixFree,
    Explicit(CsrMatrix),
}

/// Hamiltonian restricted to one magnetization sector.
#[derive(Clone, Debug)]
pub struct SectorHamiltonian {
    basis: SectorBasis,
    projector: LocalOperator,
    total_spin: u32,
    terms: Vec<PairTerm>,
    /// For local pair index `a*d + b`: nonzero `(a', b', P[(a,b),(a',b')])`.
    transitions: Vec<Vec<(u32, u32, f64)>>,
    storage: Storage,
}

/// Assembles `sum_e w_e P^(J)_e` on `sector`, storing it explicitly below the default cutoff.
pub fn assemble(graph: &LatticeGraph, s: SpinValue, total_spin: u32, sector: SectorBasis) -> Result<SectorHamiltonian> {
    assemble_with_cutoff(graph, s, total_spin, sector, EXPLICIT_DIM_CUTOFF)
}

pub fn assemble_with_cutoff(
    graph: &LatticeGraph,
    s: SpinValue,
    total_spin: u32,
    sector: SectorBasis,
    explicit_cutoff: usize,
) -> Result<SectorHamiltonian> {
    let mut h = SectorHamiltonian::matrix_free(graph, s, total_spin, sector)?;
    if h.dim() < explicit_cutoff {
        h.storage = Storage::Explicit(h.build_csr());
    }
    Ok(h)
}

impl SectorHamiltonian {
    /// Matrix-free operator for `graph` on `sector`.
    pub fn matrix_free(graph: &LatticeGraph, s: SpinValue, total_spin: u32, sector: SectorBasis) -> Result<Self> {
        if sector.twice_s() != s.twice_s() {
            return Err(Error::Structure(format!("sector has 2s = {}, model has 2s = {}", sector.twice_s(), s.twice_s())));
        }
        if sector.num_sites() != graph.num_vertices() {
            return Err(Error::Structure(format!(
                "sector has {} sites, graph {} has {} vertices",
                sector.num_sites(),
                graph.name,
                graph.num_vertices()
            )));
        }
        let projector = spin_projector(s, total_spin)?;
        let d = s.dim();
        let mask = (1u32 << sector.bits_per_site()) - 1;
        let terms = graph
            .site_edges()
            .into_iter()
            .map(|(a, b, weight)| {
                let (shift_a, shift_b) = (sector.site_shift(a), sector.site_shift(b));
                PairTerm { sites: (a, b), weight, shift_a, shift_b, clear: !((mask << shift_a) | (mask << shift_b)) }
            })
            .collect();
        let mut transitions = vec![Vec::new(); d * d];
        for (row, list) in transitions.iter_mut().enumerate() {
            // Only pairs with equal pair magnetization couple; everything else is rounding noise.
            for col in (0..d * d).filter(|col| col / d + col % d == row / d + row % d) {
                let v = projector.get(row, col);
                if v.abs() > 1e-15 {
                    list.push(((col / d) as u32, (col % d) as u32, v));
                }
            }
        }
        Ok(Self { basis: sector, projector, total_spin, terms, transitions, storage: Storage::MatrixFree })
    }

    pub fn basis(&self) -> &SectorBasis {
        &self.basis
    }

    pub fn projector(&self) -> &LocalOperator {
        &self.projector
    }

    pub fn total_spin(&self) -> u32 {
        self.total_spin
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self.storage, Storage::Explicit(_))
    }

    /// `(site_a, site_b, weight)` for every term.
    pub fn terms(&self) -> Vec<(usize, usize, f64)> {
        self.terms.iter().map(|t| (t.sites.0, t.sites.1, t.weight)).collect()
    }

    #[inline]
    fn for_each_entry(&self, row: usize, mut f: impl FnMut(usize, f64)) {
        let code = self.basis.states()[row];
        let d = self.basis.local_dim();
        let mask = (1u32 << self.basis.bits_per_site()) - 1;
        for t in &self.terms {
            let a = (code >> t.shift_a) & mask;
            let b = (code >> t.shift_b) & mask;
            for &(a2, b2, v) in &self.transitions[(a * d + b) as usize] {
                if a2 == a && b2 == b {
                    f(row, t.weight * v);
                } else {
                    let next = (code & t.clear) | (a2 << t.shift_a) | (b2 << t.shift_b);
                    debug_assert!(self.basis.index_of(next).is_some(), "term left the sector");
                    f(self.basis.rank_unchecked(next), t.weight * v);
                }
            }
        }
    }

    fn matrix_free_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_chunks_mut(ROW_CHUNK).enumerate().for_each(|(chunk, out)| {
            let base = chunk * ROW_CHUNK;
            for (k, slot) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                self.for_each_entry(base + k, |j, v| acc += v * x[j]);
                *slot = acc;
            }
        });
    }

    /// Matrix-free product regardless of storage; used to cross-check the explicit path.
    pub fn apply_matrix_free(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let mut y = vec![0.0; self.dim()];
        self.matrix_free_into(x, &mut y);
        Ok(y)
    }

    /// `H x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    pub fn build_csr(&self) -> CsrMatrix {
        let dim = self.dim();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut row_entries: Vec<(usize, f64)> = Vec::new();
        row_ptr.push(0);
        for row in 0..dim {
            row_entries.clear();
            self.for_each_entry(row, |j, v| row_entries.push((j, v)));
            row_entries.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row_entries.len() {
                let (j, mut v) = row_entries[k];
                k += 1;
                while k < row_entries.len() && row_entries[k].0 == j {
                    v += row_entries[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    cols.push(j as u32);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { dim, row_ptr, cols, vals }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.storage {
            Storage::Explicit(csr) => csr.to_dense(),
            Storage::MatrixFree => self.build_csr().to_dense(),
        }
    }

    /// Checks that every transition from every sector state stays in the sector.
    pub fn check_sector_closure(&self) -> Result<()> {
        let d = self.basis.local_dim();
        let mask = (1u32 << self.basis.bits_per_site()) - 1;
        for &code in self.basis.states() {
            for t in &self.terms {
                let a = (code >> t.shift_a) & mask;
                let b = (code >> t.shift_b) & mask;
                for &(a2, b2, _) in &self.transitions[(a * d + b) as usize] {
                    let next = (code & t.clear) | (a2 << t.shift_a) | (b2 << t.shift_b);
                    if self.basis.index_of(next).is_none() {
                        return Err(Error::Structure(format!("configuration {next:#x} is outside the sector")));
                    }
                }
            }
        }
        Ok(())
    }
}

impl LinearOperator for SectorHamiltonian {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        match &self.storage {
            Storage::Explicit(csr) => csr.apply_into(x, y),
            Storage::MatrixFree => self.matrix_free_into(x, y),
        }
    }
}

/// Full-space Hamiltonian built by embedding each projector into the tensor
/// product directly, without any sector machinery. Intended for small test systems.
pub fn full_space_dense(graph: &LatticeGraph, s: SpinValue, total_spin: u32) -> Result<DMatrix<f64>> {
    let n = graph.num_vertices();
    let d = s.dim();
    let dim = d.checked_pow(n as u32).filter(|&x| x <= 1 << 12).ok_or(Error::DenseCutoff { dim: usize::MAX, cutoff: 1 << 12 })?;
    let p = spin_projector(s, total_spin)?;
    let mut h = DMatrix::zeros(dim, dim);
    let stride = |site: usize| d.pow((n - 1 - site) as u32);
    for (u, v, w) in graph.site_edges() {
        let (su, sv) = (stride(u), stride(v));
        for col in 0..dim {
            let a = (col / su) % d;
            let b = (col / sv) % d;
            let rest = col - a * su - b * sv;
            for a2 in 0..d {
                for b2 in 0..d {
                    let val = p.get(a2 * d + b2, a * d + b);
                    if val != 0.0 {
                        h[(rest + a2 * su + b2 * sv, col)] += w * val;
                    }
                }
            }
        }
    }
    Ok(h)
}
