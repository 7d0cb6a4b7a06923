//! Thick-restart Lanczos for the low end of a symmetric spectrum.
//!
//! Every new Krylov vector is orthogonalized twice (classical Gram-Schmidt)
//! against the locked vectors and the whole current basis. The projected
//! matrix is the full `V^T H V` assembled from those coefficients, so after a
//! restart the kept Ritz vectors and their coupling to the residual direction
//! need no special bookkeeping.
//!
//! Reductions run over fixed row chunks and are summed in chunk order, so
//! results depend on the seed and nothing else.

use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::SectorLabel;
use crate::error::{Error, Result};
use crate::hamiltonian::LinearOperator;
use crate::io::Checkpoint;

use super::SolverFailure;

const CHUNK: usize = 1 << 14;
const BREAKDOWN: f64 = 1e-12;

/// Where and how often a run saves its state.
#[derive(Clone, Debug)]
pub struct CheckpointConfig {
    pub path: PathBuf,
    pub interval: Duration,
    /// Continue from `path` when it exists and matches the run.
    pub resume: bool,
}

/// One line of progress output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProgressRecord {
    pub sector: Option<SectorLabel>,
    pub matvecs: usize,
    pub restart: usize,
    pub ritz: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Shared destination for line-delimited JSON progress records.
#[derive(Clone)]
pub struct ProgressSink(Arc<Mutex<Box<dyn Write + Send>>>);

impl ProgressSink {
    pub fn new(w: impl Write + Send + 'static) -> Self {
        Self(Arc::new(Mutex::new(Box::new(w))))
    }

    pub fn stderr() -> Self {
        Self::new(std::io::stderr())
    }

    pub fn emit(&self, record: &ProgressRecord) {
        if let Ok(mut w) = self.0.lock() {
            let line = serde_json::to_string(record).expect("progress records serialize");
            // Progress is advisory; a closed stream must not abort the solve.
            let _ = writeln!(w, "{line}");
            let _ = w.flush();
        }
    }
}

impl std::fmt::Debug for ProgressSink {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ProgressSink")
    }
}

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    /// Bound on `||H v - theta v||` for unit `v`.
    pub tol: f64,
    pub seed: u64,
    /// Largest number of Krylov vectors held at once.
    pub basis_size: usize,
    pub max_matvecs: usize,
    pub sector: Option<SectorLabel>,
    pub checkpoint: Option<CheckpointConfig>,
    pub progress: Option<ProgressSink>,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { tol: 1e-10, seed: 0, basis_size: 64, max_matvecs: 100_000, sector: None, checkpoint: None, progress: None }
    }
}

impl LanczosOptions {
    pub fn new(tol: f64, seed: u64) -> Self {
        Self { tol, seed, ..Self::default() }
    }
}

/// Converged low eigenpairs.
#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// True residual norms `||H v - lambda v||`, unit `v`.
    pub residuals: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub matvecs: usize,
    pub restarts: usize,
    /// The Krylov space became invariant, so the values are every eigenvalue it can reach.
    pub exhausted: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect::<Vec<f64>>()
        .into_iter()
        .sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: &mut [f64], c: f64) {
    a.par_iter_mut().for_each(|x| *x *= c);
}

/// `V^T w`, summed chunk by chunk in a fixed order.
fn project(vs: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    if vs.is_empty() {
        return Vec::new();
    }
    let partials: Vec<Vec<f64>> = w
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, wc)| {
            let base = c * CHUNK;
            vs.iter().map(|v| v[base..base + wc.len()].iter().zip(wc).map(|(p, q)| p * q).sum()).collect()
        })
        .collect();
    let mut h = vec![0.0; vs.len()];
    for part in partials {
        for (acc, x) in h.iter_mut().zip(part) {
            *acc += x;
        }
    }
    h
}

/// `w -= V h`.
fn subtract(vs: &[Vec<f64>], h: &[f64], w: &mut [f64]) {
    w.par_chunks_mut(CHUNK).enumerate().for_each(|(c, wc)| {
        let base = c * CHUNK;
        for (v, &coef) in vs.iter().zip(h) {
            for (x, y) in wc.iter_mut().zip(&v[base..]) {
                *x -= coef * y;
            }
        }
    });
}

/// Two passes of classical Gram-Schmidt; returns the accumulated coefficients.
fn cgs2(vs: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut total = vec![0.0; vs.len()];
    for _ in 0..2 {
        let h = project(vs, w);
        subtract(vs, &h, w);
        for (t, x) in total.iter_mut().zip(h) {
            *t += x;
        }
    }
    total
}

/// Removes the locked span and the basis span from `w`, returning the basis
/// coefficients. Passes repeat while the norm keeps collapsing, since a
/// nearly invariant Krylov space would otherwise magnify rounding along the
/// locked directions.
fn orthogonalize(locked: &[Vec<f64>], basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut total = vec![0.0; basis.len()];
    let mut before = norm(w);
    for pass in 0..4 {
        let h = project(locked, w);
        subtract(locked, &h, w);
        let h = project(basis, w);
        subtract(basis, &h, w);
        for (t, x) in total.iter_mut().zip(h) {
            *t += x;
        }
        let after = norm(w);
        if pass > 0 && after > 0.5 * before {
            break;
        }
        before = after;
    }
    total
}

/// Replaces the leading `cols` basis vectors by `V Y[:, ..cols]`, in place, one row block at a time.
fn rotate_basis(basis: &mut [Vec<f64>], y: &DMatrix<f64>, cols: usize) {
    let rows = y.nrows();
    let n = basis[0].len();
    let num_chunks = n.div_ceil(CHUNK);
    let mut per_chunk: Vec<Vec<&mut [f64]>> = (0..num_chunks).map(|_| Vec::with_capacity(rows)).collect();
    for v in basis[..rows].iter_mut() {
        for (c, piece) in v.chunks_mut(CHUNK).enumerate() {
            per_chunk[c].push(piece);
        }
    }
    per_chunk.into_par_iter().for_each(|mut pieces| {
        let len = pieces[0].len();
        let mut out = vec![0.0; cols * len];
        for (l, piece) in pieces.iter().enumerate() {
            for i in 0..cols {
                let coef = y[(l, i)];
                if coef != 0.0 {
                    for (o, x) in out[i * len..(i + 1) * len].iter_mut().zip(piece.iter()) {
                        *o += coef * x;
                    }
                }
            }
        }
        for (i, piece) in pieces.iter_mut().take(cols).enumerate() {
            piece.copy_from_slice(&out[i * len..(i + 1) * len]);
        }
    });
}

fn combine(basis: &[Vec<f64>], coefs: &[f64]) -> Vec<f64> {
    let n = basis[0].len();
    let mut x = vec![0.0; n];
    x.par_chunks_mut(CHUNK).enumerate().for_each(|(c, xc)| {
        let base = c * CHUNK;
        for (v, &coef) in basis.iter().zip(coefs) {
            for (o, y) in xc.iter_mut().zip(&v[base..]) {
                *o += coef * y;
            }
        }
    });
    x
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng, locked: &[Vec<f64>]) -> Option<Vec<f64>> {
    for _ in 0..4 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        cgs2(locked, &mut v);
        let nv = norm(&v);
        if nv > 1e-8 {
            scale(&mut v, 1.0 / nv);
            return Some(v);
        }
    }
    None
}

/// Which eigenpairs a run is after.
#[derive(Clone, Copy, Debug)]
struct Target {
    nev: usize,
    want_vectors: bool,
    /// Ritz values at or below this level do not count towards `nev`; once
    /// converged they are locked and leave the working basis.
    floor: Option<f64>,
}

struct Run<'a, O: LinearOperator + ?Sized> {
    op: &'a O,
    opts: &'a LanczosOptions,
    /// Deflated directions: supplied by the caller, then pairs locked below the floor.
    locked: Vec<Vec<f64>>,
    external: usize,
    /// Values and true residuals of the pairs locked during this run.
    floor_pairs: Vec<(f64, f64)>,
    matvecs: usize,
    restarts: usize,
}

impl<'a, O: LinearOperator + ?Sized> Run<'a, O> {
    fn new(op: &'a O, opts: &'a LanczosOptions, locked: Vec<Vec<f64>>) -> Self {
        let external = locked.len();
        Self { op, opts, locked, external, floor_pairs: Vec::new(), matvecs: 0, restarts: 0 }
    }

    fn apply(&mut self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.op.apply_into(x, &mut y);
        self.matvecs += 1;
        y
    }

    fn residual_norm(&mut self, x: &[f64], theta: f64) -> f64 {
        let hx = self.apply(x);
        let r: Vec<f64> = hx.iter().zip(x).map(|(a, b)| a - theta * b).collect();
        norm(&r) / norm(x)
    }

    fn failure(&self, reason: &str, estimates: Vec<f64>, residuals: Vec<f64>) -> Error {
        Error::Solver(SolverFailure {
            reason: reason.to_string(),
            sector: self.opts.sector,
            estimates,
            residuals,
            matvecs: self.matvecs,
            restarts: self.restarts,
        })
    }

    // Checkpoint scalars: [nev, floor locks f, kept k, f values, f residuals, k Ritz values].
    // Checkpoint vectors: the f floor-locked vectors, then the k + 1 basis vectors.
    fn try_resume(&mut self, target: Target, n: usize) -> Result<Option<(Vec<Vec<f64>>, Vec<f64>)>> {
        let Some(cfg) = &self.opts.checkpoint else { return Ok(None) };
        if !cfg.resume || !cfg.path.exists() {
            return Ok(None);
        }
        let ck = Checkpoint::load(&cfg.path)?;
        let mismatch = || Error::Checkpoint(format!("{} does not match this run", cfg.path.display()));
        if ck.dim() != n
            || ck.seed != self.opts.seed
            || !self.opts.sector.is_none_or(|s| s == ck.sector)
            || ck.scalars.len() < 3
            || ck.scalars[0] as usize != target.nev
            || self.external != 0
        {
            return Err(mismatch());
        }
        let (f, keep) = (ck.scalars[1] as usize, ck.scalars[2] as usize);
        if ck.vectors.len() != f + keep + 1 || ck.scalars.len() != 3 + 2 * f + keep {
            return Err(Error::Checkpoint("inconsistent checkpoint body".into()));
        }
        let mut vectors = ck.vectors;
        let basis = vectors.split_off(f);
        self.locked = vectors;
        self.floor_pairs = (0..f).map(|i| (ck.scalars[3 + i], ck.scalars[3 + f + i])).collect();
        self.matvecs = ck.matvecs as usize;
        self.restarts = ck.restarts as usize;
        Ok(Some((basis, ck.scalars[3 + 2 * f..].to_vec())))
    }

    fn save(&self, target: Target, basis: &[Vec<f64>], theta: &[f64]) -> Result<()> {
        let Some(cfg) = &self.opts.checkpoint else { return Ok(()) };
        let f = self.floor_pairs.len();
        let mut scalars = vec![target.nev as f64, f as f64, theta.len() as f64];
        scalars.extend(self.floor_pairs.iter().map(|p| p.0));
        scalars.extend(self.floor_pairs.iter().map(|p| p.1));
        scalars.extend_from_slice(theta);
        let sector = self.opts.sector.unwrap_or(SectorLabel { num_sites: 0, twice_s: 0, twice_total_sz: 0 });
        Checkpoint {
            sector,
            seed: self.opts.seed,
            matvecs: self.matvecs as u64,
            restarts: self.restarts as u64,
            scalars,
            vectors: self.locked[self.external..].iter().chain(basis).cloned().collect(),
        }
        .save(&cfg.path)
    }

    fn finish(&self, mut values: Vec<f64>, mut residuals: Vec<f64>, vectors: Vec<Vec<f64>>, exhausted: bool) -> Eigenpairs {
        let mut all_values: Vec<f64> = self.floor_pairs.iter().map(|p| p.0).collect();
        let mut all_residuals: Vec<f64> = self.floor_pairs.iter().map(|p| p.1).collect();
        all_values.append(&mut values);
        all_residuals.append(&mut residuals);
        let mut idx: Vec<usize> = (0..all_values.len()).collect();
        idx.sort_by(|&a, &b| all_values[a].total_cmp(&all_values[b]));
        let all_values = idx.iter().map(|&i| all_values[i]).collect();
        let all_residuals = idx.iter().map(|&i| all_residuals[i]).collect();
        Eigenpairs {
            values: all_values,
            residuals: all_residuals,
            vectors,
            matvecs: self.matvecs,
            restarts: self.restarts,
            exhausted,
        }
    }

    /// Lowest Ritz pairs of the operator deflated by the locked set.
    fn solve(&mut self, target: Target, rng: &mut ChaCha8Rng) -> Result<Eigenpairs> {
        let n = self.op.dim();
        if n <= self.locked.len() {
            return Err(Error::Domain("no directions left outside the locked set".into()));
        }
        let nev = target.nev.min(n - self.locked.len());
        let m = self.opts.basis_size.max(2 * nev + 4).min(n - self.locked.len());
        let tol = self.opts.tol;

        let mut t = DMatrix::<f64>::zeros(m, m);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        match self.try_resume(target, n)? {
            Some((vectors, theta)) => {
                for (i, &th) in theta.iter().enumerate() {
                    t[(i, i)] = th;
                }
                basis = vectors;
            }
            None => {
                let v = random_unit(n, rng, &self.locked)
                    .ok_or_else(|| self.failure("start vector lies in the locked span", vec![], vec![]))?;
                basis.push(v);
            }
        }
        let mut last_save = Instant::now();

        loop {
            let free = n - self.locked.len();
            let m_now = m.min(free);
            // Extend the Krylov basis until it holds m vectors or becomes invariant.
            let mut exhausted = false;
            let mut residual: Option<(Vec<f64>, f64)> = None;
            loop {
                let j = basis.len() - 1;
                let mut w = self.apply(&basis[j]);
                let scale_hint = norm(&w).max(1.0);
                let h = orthogonalize(&self.locked, &basis, &mut w);
                for (i, &hi) in h.iter().enumerate() {
                    t[(i, j)] = hi;
                    t[(j, i)] = hi;
                }
                let beta = norm(&w);
                if beta <= BREAKDOWN * scale_hint || basis.len() >= free {
                    exhausted = true;
                    break;
                }
                scale(&mut w, 1.0 / beta);
                if basis.len() >= m_now {
                    residual = Some((w, beta));
                    break;
                }
                basis.push(w);
                if self.matvecs >= self.opts.max_matvecs {
                    break;
                }
            }

            let size = basis.len();
            let eig = t.view((0, 0), (size, size)).into_owned().symmetric_eigen();
            let mut order: Vec<usize> = (0..size).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let theta: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            let y = DMatrix::from_fn(size, size, |r, c| eig.eigenvectors[(r, order[c])]);
            let beta = residual.as_ref().map_or(0.0, |r| r.1);
            let estimates: Vec<f64> = (0..size).map(|i| (beta * y[(size - 1, i)]).abs()).collect();
            let below = target.floor.map_or(0, |f| theta.iter().take_while(|&&x| x <= f).count());
            let required = (below + nev).min(size);
            let want = if exhausted { size } else { required };

            if let Some(sink) = &self.opts.progress {
                sink.emit(&ProgressRecord {
                    sector: self.opts.sector,
                    matvecs: self.matvecs,
                    restart: self.restarts,
                    ritz: theta[..want].to_vec(),
                    residuals: estimates[..want].to_vec(),
                });
            }

            if exhausted || estimates[..want].iter().all(|&e| e < tol) {
                let mut values = Vec::with_capacity(want);
                let mut residuals = Vec::with_capacity(want);
                let mut vectors = Vec::new();
                for i in 0..want {
                    let coefs: Vec<f64> = y.column(i).iter().copied().collect();
                    let x = combine(&basis, &coefs);
                    residuals.push(self.residual_norm(&x, theta[i]));
                    values.push(theta[i]);
                    if target.want_vectors {
                        vectors.push(x);
                    }
                }
                // An exhausted space may still carry rounding in its upper Ritz pairs; keep the accurate prefix.
                let accurate = residuals.iter().take_while(|&&r| r < tol).count();
                if accurate >= required {
                    values.truncate(accurate);
                    residuals.truncate(accurate);
                    vectors.truncate(accurate);
                    return Ok(self.finish(values, residuals, vectors, exhausted && accurate == want));
                }
                if exhausted {
                    return Err(self.failure("invariant subspace with inaccurate Ritz pairs", values, residuals));
                }
            }

            if self.matvecs >= self.opts.max_matvecs || residual.is_none() {
                return Err(self.failure("matrix-vector budget exhausted", theta[..want].to_vec(), estimates[..want].to_vec()));
            }

            // Thick restart: keep the lowest Ritz vectors plus the residual direction.
            let keep = (want + (size - want) / 2).clamp(1, size - 1);
            rotate_basis(&mut basis, &y, keep);
            basis.truncate(keep);
            let mut kept_theta = theta[..keep].to_vec();

            // Converged pairs below the floor move to the locked set.
            let lockable = estimates[..below.min(keep)].iter().take_while(|&&e| e < tol).count();
            let mut moved = 0;
            while moved < lockable && basis.len() > 1 {
                let r = self.residual_norm(&basis[0], kept_theta[0]);
                if r >= tol {
                    break;
                }
                self.floor_pairs.push((kept_theta.remove(0), r));
                self.locked.push(basis.remove(0));
                moved += 1;
            }

            basis.push(residual.take().unwrap().0);
            t.fill(0.0);
            for (i, &th) in kept_theta.iter().enumerate() {
                t[(i, i)] = th;
            }
            self.restarts += 1;

            if let Some(cfg) = &self.opts.checkpoint {
                if last_save.elapsed() >= cfg.interval {
                    self.save(target, &basis, &kept_theta)?;
                    last_save = Instant::now();
                }
            }
        }
    }
}

/// Lowest `nev` Ritz pairs of a single Krylov sequence.
///
/// In exact arithmetic the sequence sees each distinct eigenvalue once,
/// however degenerate, so this resolves the bottom of the distinct spectrum
/// cheaply. Rounding can add further copies of a level late in a run, so the
/// number of copies says nothing about multiplicity.
pub fn lanczos_distinct<O: LinearOperator + ?Sized>(op: &O, nev: usize, opts: &LanczosOptions) -> Result<Eigenpairs> {
    distinct_run(op, nev, None, opts)
}

/// Like [`lanczos_distinct`], but Ritz values at or below `floor` are extra:
/// the run resolves every such value it meets plus `nev` values above it.
/// Converged values below the floor are locked and deflated, so repeated
/// copies of a large kernel never crowd out the levels above it.
pub fn lanczos_above_floor<O: LinearOperator + ?Sized>(
    op: &O,
    nev: usize,
    floor: f64,
    opts: &LanczosOptions,
) -> Result<Eigenpairs> {
    distinct_run(op, nev, Some(floor), opts)
}

fn distinct_run<O: LinearOperator + ?Sized>(op: &O, nev: usize, floor: Option<f64>, opts: &LanczosOptions) -> Result<Eigenpairs> {
    if nev == 0 {
        return Err(Error::Domain("nev must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    Run::new(op, opts, Vec::new()).solve(Target { nev, want_vectors: false, floor }, &mut rng)
}

/// The `k` lowest eigenvalues counted with multiplicity.
///
/// Eigenpairs are found one at a time, each run deflating the vectors locked
/// by the previous ones, so degenerate levels are returned as many times as
/// they occur.
pub fn lanczos_lowest<O: LinearOperator + ?Sized>(op: &O, k: usize, opts: &LanczosOptions) -> Result<Eigenpairs> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if k > op.dim() {
        return Err(Error::Domain(format!("k = {k} exceeds the dimension {}", op.dim())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut out = Eigenpairs {
        values: Vec::with_capacity(k),
        residuals: Vec::with_capacity(k),
        vectors: Vec::new(),
        matvecs: 0,
        restarts: 0,
        exhausted: false,
    };
    // Checkpoints would be ambiguous across the k sub-runs.
    let opts = LanczosOptions { checkpoint: None, ..opts.clone() };
    while locked.len() < k {
        let mut run = Run::new(op, &opts, std::mem::take(&mut locked));
        let found = run.solve(Target { nev: 1, want_vectors: true, floor: None }, &mut rng);
        out.matvecs += run.matvecs;
        out.restarts += run.restarts;
        locked = run.locked;
        let found = found?;
        out.values.push(found.values[0]);
        out.residuals.push(found.residuals[0]);
        let mut v = found.vectors.into_iter().next().unwrap();
        // Keep the locked set orthonormal to working precision.
        cgs2(&locked, &mut v);
        let nv = norm(&v);
        scale(&mut v, 1.0 / nv);
        locked.push(v);
    }
    // Deflation finds levels in order up to the tolerance; sort away ties broken by rounding.
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| out.values[a].total_cmp(&out.values[b]));
    out.values = idx.iter().map(|&i| out.values[i]).collect();
    out.residuals = idx.iter().map(|&i| out.residuals[i]).collect();
    out.vectors = idx.iter().map(|&i| std::mem::take(&mut locked[i])).collect();
    Ok(out)
}
