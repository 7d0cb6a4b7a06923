//! Spin-s operator matrices and two-site total-spin projectors.
//!
//! Everything lives in the standard `Sz` eigenbasis, local index `i` carrying
//! magnetization `m = s - i`. In that basis `Sz`, `S+` and `S-` are real, so
//! `S_i . S_j` and every projector built from it are real symmetric.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

const SYMMETRY_TOL: f64 = 1e-14;

/// A spin quantum number stored as `2s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinValue {
    twice_s: u32,
}

impl SpinValue {
    pub const HALF: SpinValue = SpinValue { twice_s: 1 };
    pub const THREE_HALVES: SpinValue = SpinValue { twice_s: 3 };

    pub fn new(twice_s: u32) -> Result<Self> {
        if twice_s == 0 {
            return domain("spin must satisfy 2s >= 1");
        }
        Ok(Self { twice_s })
    }

    pub fn twice_s(self) -> u32 {
        self.twice_s
    }

    pub fn s(self) -> f64 {
        f64::from(self.twice_s) / 2.0
    }

    /// Local Hilbert-space dimension `2s + 1`.
    pub fn dim(self) -> usize {
        self.twice_s as usize + 1
    }

    /// Magnetization of local basis state `i`.
    pub fn m(self, i: usize) -> f64 {
        self.s() - i as f64
    }

    /// Largest total spin reachable by coupling two such spins.
    pub fn max_pair_spin(self) -> u32 {
        self.twice_s
    }
}

/// A dense real symmetric operator acting on an ordered list of sites.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator {
    entries: DMatrix<f64>,
    support: Vec<usize>,
}

impl LocalOperator {
    pub fn new(entries: DMatrix<f64>, support: Vec<usize>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::Structure(format!("local operator must be square, got {}x{}", entries.nrows(), entries.ncols())));
        }
        let asym = (&entries - entries.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(Error::Structure(format!("local operator is not symmetric (max asymmetry {asym:e})")));
        }
        Ok(Self { entries, support })
    }

    /// Builds from an almost-symmetric product, averaging away rounding asymmetry.
    fn symmetrized(m: DMatrix<f64>, support: Vec<usize>) -> Self {
        let entries = (&m + m.transpose()) * 0.5;
        Self { entries, support }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    /// Eigenvalues in ascending order.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.entries.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// `Sz`, `S+` and `S-` for spin `s`.
pub fn spin_matrices(s: SpinValue) -> (LocalOperator, DMatrix<f64>, DMatrix<f64>) {
    let d = s.dim();
    let sz = DMatrix::from_fn(d, d, |i, j| if i == j { s.m(i) } else { 0.0 });
    let spin = s.s();
    let mut splus = DMatrix::zeros(d, d);
    for i in 1..d {
        // S+ |m> = sqrt(s(s+1) - m(m+1)) |m+1>, and |m+1> sits one index lower.
        let m = s.m(i);
        splus[(i - 1, i)] = (spin * (spin + 1.0) - m * (m + 1.0)).sqrt();
    }
    let sminus = splus.transpose();
    let sz = LocalOperator { entries: sz, support: vec![0] };
    (sz, splus, sminus)
}

/// `S_0 . S_1 = Sz Sz + (S+ S- + S- S+)/2` on the two-site space.
pub fn heisenberg_pair(s: SpinValue) -> LocalOperator {
    let (sz, sp, sm) = spin_matrices(s);
    let sz = sz.entries;
    let m = sz.kronecker(&sz) + (sp.kronecker(&sm) + sm.kronecker(&sp)) * 0.5;
    LocalOperator::symmetrized(m, vec![0, 1])
}

/// Eigenvalues of `S_0 . S_1` on each total-spin multiplet, `J = 0..=2s`.
pub fn casimir_eigenvalues(s: SpinValue) -> Vec<(u32, f64)> {
    let ss = s.s() * (s.s() + 1.0);
    (0..=s.max_pair_spin())
        .map(|j| {
            let jf = f64::from(j);
            (j, (jf * (jf + 1.0) - 2.0 * ss) / 2.0)
        })
        .collect()
}

/// Projector onto total spin `j` of two spin-`s` sites.
///
/// Built by Lagrange interpolation on the Heisenberg coupling:
/// `P(J) = prod_{J' != J} (S.S - lambda_J') / (lambda_J - lambda_J')`.
pub fn spin_projector(s: SpinValue, j: u32) -> Result<LocalOperator> {
    if j > s.max_pair_spin() {
        return domain(format!("total spin {j} out of range 0..={} for 2s = {}", s.max_pair_spin(), s.twice_s()));
    }
    let pair = heisenberg_pair(s);
    let lambdas = casimir_eigenvalues(s);
    let lambda_j = lambdas[j as usize].1;
    let d2 = pair.dim();
    let mut p = DMatrix::identity(d2, d2);
    for &(other, lambda) in &lambdas {
        if other == j {
            continue;
        }
        let shifted = &pair.entries - DMatrix::identity(d2, d2) * lambda;
        p = (p * shifted) / (lambda_j - lambda);
    }
    Ok(LocalOperator::symmetrized(p, vec![0, 1]))
}
