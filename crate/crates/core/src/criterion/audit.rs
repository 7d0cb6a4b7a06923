//! Multiplicity counts of chain edges and edge pairs over all shifted subsystems.
//!
//! Subsystem copies are weighted `K-2` for A and B and `1` for C and C~. A and
//! B are placed once per hexagon (even row shifts), C and C~ once per row.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::lattice::{classify_edge_pair, hexagonal_chain, shift_subsystem, Edge, EdgeClass, EdgeKey, PairClass, Subsystem};

/// Raw occurrence counts `(A, B, C + C~)`.
pub type RawCounts = [u64; 3];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTally {
    pub class: String,
    /// Number of edges (or edge pairs) in the class.
    pub members: usize,
    /// Distinct weighted totals seen, ascending.
    pub totals: Vec<u64>,
    /// Distinct raw `(A, B, C)` counts seen, ascending.
    pub raw_counts: Vec<RawCounts>,
    /// Required total, or bound for disjoint pairs.
    pub expected: u64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjointMax {
    pub total: u64,
    pub raw_counts: RawCounts,
    /// An achieving pair, as `"x1 y1 x2 y2"` endpoint strings.
    pub pair: [String; 2],
    pub bound: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub classes: Vec<ClassTally>,
    pub max_disjoint: Option<DisjointMax>,
    pub pass: bool,
}

fn check_preconditions(n: usize, k: usize) -> Result<()> {
    if k < 4 || k % 2 != 0 {
        return domain(format!("K must be an even integer >= 4, got {k}"));
    }
    if n < 20.max(2 * k + 1) {
        return domain(format!("audit needs n >= max(20, 2K+1) = {}, got n = {n}", 20.max(2 * k + 1)));
    }
    Ok(())
}

/// Every shifted copy as (slot in `RawCounts`, edge indices into the chain).
fn shifted_copies(n: usize, k: usize, chain_edges: &[Edge]) -> Result<Vec<(usize, Vec<usize>)>> {
    let index: BTreeMap<EdgeKey, usize> = chain_edges.iter().enumerate().map(|(i, e)| (e.key(), i)).collect();
    let rows = 2 * n as i64;
    let mut out = Vec::new();
    for (kind, slot, step) in [(Subsystem::A, 0, 2), (Subsystem::B, 1, 2), (Subsystem::C, 2, 1), (Subsystem::CTilde, 2, 1)] {
        for s in (0..rows).step_by(step) {
            let edges = shift_subsystem(kind, Some(k), s, n)?;
            out.push((slot, edges.iter().map(|e| index[&e.key()]).collect()));
        }
    }
    Ok(out)
}

fn weighted(raw: RawCounts, k: usize) -> u64 {
    (k as u64 - 2) * (raw[0] + raw[1]) + raw[2]
}

struct Accumulator {
    k: usize,
    members: usize,
    totals: Vec<u64>,
    raw: Vec<RawCounts>,
}

impl Accumulator {
    fn new(k: usize) -> Self {
        Self { k, members: 0, totals: Vec::new(), raw: Vec::new() }
    }

    fn add(&mut self, raw: RawCounts) {
        self.members += 1;
        self.totals.push(weighted(raw, self.k));
        self.raw.push(raw);
    }

    fn finish(mut self, class: &str, expected: u64, at_most: bool) -> ClassTally {
        self.totals.sort_unstable();
        self.totals.dedup();
        self.raw.sort_unstable();
        self.raw.dedup();
        let pass =
            self.members > 0 && if at_most { self.totals.iter().all(|&t| t <= expected) } else { self.totals == [expected] };
        ClassTally { class: class.to_string(), members: self.members, totals: self.totals, raw_counts: self.raw, expected, pass }
    }
}

/// Weighted multiplicity of every chain edge; diagonals must total `7(K-2)+1`, rungs `7(K-2)`.
pub fn coverage_audit(n: usize, k: usize) -> Result<CoverageReport> {
    check_preconditions(n, k)?;
    let chain = hexagonal_chain(n)?;
    let mut raw = vec![[0u64; 3]; chain.edges.len()];
    for (slot, edges) in shifted_copies(n, k, &chain.edges)? {
        for e in edges {
            raw[e][slot] += 1;
        }
    }
    let unit = 7 * (k as u64 - 2);
    let mut classes = Vec::new();
    for (class, expected) in [(EdgeClass::DiagUp, unit + 1), (EdgeClass::DiagDown, unit + 1), (EdgeClass::Horizontal, unit)] {
        let mut acc = Accumulator::new(k);
        for (e, r) in chain.edges.iter().zip(&raw) {
            if e.class == class {
                acc.add(*r);
            }
        }
        classes.push(acc.finish(class.as_str(), expected, false));
    }
    let pass = classes.iter().all(|c| c.pass);
    Ok(CoverageReport { n, k, classes, max_disjoint: None, pass })
}

/// Weighted multiplicity of every pair of distinct chain edges.
///
/// Pairs sharing a vertex must total exactly `6(K-2)`; disjoint pairs at most that.
pub fn pair_coverage_audit(n: usize, k: usize) -> Result<CoverageReport> {
    check_preconditions(n, k)?;
    let chain = hexagonal_chain(n)?;
    let m = chain.edges.len();
    let mut raw = vec![[0u64; 3]; m * m];
    for (slot, edges) in shifted_copies(n, k, &chain.edges)? {
        for (i, &e) in edges.iter().enumerate() {
            for &f in &edges[i + 1..] {
                let (lo, hi) = if e < f { (e, f) } else { (f, e) };
                raw[lo * m + hi][slot] += 1;
            }
        }
    }
    let bound = 6 * (k as u64 - 2);
    let kinds = [PairClass::WedgeLeft, PairClass::WedgeRight, PairClass::DiagHorizontal, PairClass::Disjoint];
    let mut accs: Vec<Accumulator> = kinds.iter().map(|_| Accumulator::new(k)).collect();
    let mut max_disjoint: Option<(u64, RawCounts, usize, usize)> = None;
    for i in 0..m {
        for j in i + 1..m {
            let r = raw[i * m + j];
            let class = classify_edge_pair(&chain.edges[i], &chain.edges[j]);
            let slot = kinds.iter().position(|&c| c == class).expect("distinct edges have a pair class");
            accs[slot].add(r);
            if class == PairClass::Disjoint {
                let t = weighted(r, k);
                if max_disjoint.is_none_or(|(best, ..)| t > best) {
                    max_disjoint = Some((t, r, i, j));
                }
            }
        }
    }
    let names = ["wedge_left", "wedge_right", "diag_horizontal", "disjoint"];
    let classes: Vec<ClassTally> = accs
        .into_iter()
        .zip(names)
        .zip(kinds)
        .map(|((acc, name), kind)| acc.finish(name, bound, kind == PairClass::Disjoint))
        .collect();
    let endpoints = |e: &Edge| format!("{} {} {} {}", e.a.x, e.a.y, e.b.x, e.b.y);
    let max_disjoint = max_disjoint.map(|(total, raw_counts, i, j)| DisjointMax {
        total,
        raw_counts,
        pair: [endpoints(&chain.edges[i]), endpoints(&chain.edges[j])],
        bound,
    });
    let pass = classes.iter().all(|c| c.pass);
    Ok(CoverageReport { n, k, classes, max_disjoint, pass })
}

impl CoverageReport {
    pub fn class(&self, name: &str) -> Option<&ClassTally> {
        self.classes.iter().find(|c| c.class == name)
    }
}
