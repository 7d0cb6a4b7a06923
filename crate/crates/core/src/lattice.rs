//! Hexagonal chain in Cartesian representation, its A/B/C subsystems, and
//! the hexagonal sun.
//!
//! The chain `H_n` is drawn as two columns `x = 0, 1` of `2n` rows. Column
//! edges `(x, y) - (x, y + 1)` wrap around vertically; rungs `(0, y) - (1, y)`
//! sit on even rows, so each hexagon spans rows `2t ..= 2t + 2`.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub x: i32,
    pub y: i32,
}

impl Vertex {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Geometric direction of an edge in the hexagon drawing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeClass {
    DiagUp,
    DiagDown,
    Horizontal,
}

impl EdgeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeClass::DiagUp => "diag_up",
            EdgeClass::DiagDown => "diag_down",
            EdgeClass::Horizontal => "horizontal",
        }
    }

    pub fn is_diagonal(self) -> bool {
        !matches!(self, EdgeClass::Horizontal)
    }

    fn mirrored(self) -> Self {
        match self {
            EdgeClass::DiagUp => EdgeClass::DiagDown,
            EdgeClass::DiagDown => EdgeClass::DiagUp,
            EdgeClass::Horizontal => EdgeClass::Horizontal,
        }
    }
}

/// Sun region of an edge; `None` outside the sun.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Inner,
    Outer,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: Vertex,
    pub b: Vertex,
    pub weight: f64,
    pub class: EdgeClass,
    pub region: Region,
}

/// Unordered endpoint pair used for set membership.
pub type EdgeKey = (Vertex, Vertex);

impl Edge {
    fn unit(a: Vertex, b: Vertex, class: EdgeClass) -> Self {
        Self { a, b, weight: 1.0, class, region: Region::None }
    }

    pub fn key(&self) -> EdgeKey {
        if self.a <= self.b {
            (self.a, self.b)
        } else {
            (self.b, self.a)
        }
    }

    pub fn touches(&self, v: Vertex) -> bool {
        self.a == v || self.b == v
    }

    /// Common endpoint of two distinct edges, if any.
    pub fn shared_vertex(&self, other: &Edge) -> Option<Vertex> {
        [self.a, self.b].into_iter().find(|&v| other.touches(v))
    }
}

/// Class of a column edge `(x, y) - (x, y + 1)`.
fn column_class(x: i32, y: i32) -> EdgeClass {
    if (x + y).rem_euclid(2) == 0 {
        EdgeClass::DiagUp
    } else {
        EdgeClass::DiagDown
    }
}

fn column_edge(x: i32, y: i32, period: Option<i32>) -> Edge {
    let top = match period {
        Some(p) => (y + 1).rem_euclid(p),
        None => y + 1,
    };
    Edge::unit(Vertex::new(x, y), Vertex::new(x, top), column_class(x, y))
}

fn rung(y: i32) -> Edge {
    Edge::unit(Vertex::new(0, y), Vertex::new(1, y), EdgeClass::Horizontal)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeGraph {
    pub name: String,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub vertical_period: Option<i32>,
}

impl LatticeGraph {
    /// Validated graph: distinct vertices, edges between listed vertices, positive weights, degree <= 3.
    pub fn new(name: String, vertices: Vec<Vertex>, edges: Vec<Edge>, vertical_period: Option<i32>) -> Result<Self> {
        let graph = Self { name, vertices, edges, vertical_period };
        graph.validate()?;
        Ok(graph)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        let verts: HashSet<_> = self.vertices.iter().copied().collect();
        if verts.len() != self.vertices.len() {
            return Err(Error::Structure(format!("{}: duplicate vertices", self.name)));
        }
        for e in &self.edges {
            if !verts.contains(&e.a) || !verts.contains(&e.b) || e.a == e.b {
                return Err(Error::Structure(format!("{}: bad edge {}-{}", self.name, e.a, e.b)));
            }
            if !(e.weight > 0.0) {
                return Err(Error::Structure(format!("{}: non-positive weight", self.name)));
            }
            if !seen.insert(e.key()) {
                return Err(Error::Structure(format!("{}: duplicate edge {}-{}", self.name, e.a, e.b)));
            }
        }
        if let Some(&d) = self.degrees().iter().max() {
            if d > 3 {
                return Err(Error::Structure(format!("{}: vertex degree {d} > 3", self.name)));
            }
        }
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_index(&self, v: Vertex) -> Option<usize> {
        self.vertices.iter().position(|&w| w == v)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices.len()];
        for e in &self.edges {
            for v in [e.a, e.b] {
                if let Some(i) = self.vertex_index(v) {
                    deg[i] += 1;
                }
            }
        }
        deg
    }

    /// Edges as `(site, site, weight)` in vertex-list numbering.
    pub fn site_edges(&self) -> Vec<(usize, usize, f64)> {
        self.edges
            .iter()
            .map(|e| {
                let a = self.vertex_index(e.a).expect("validated edge endpoint");
                let b = self.vertex_index(e.b).expect("validated edge endpoint");
                (a, b, e.weight)
            })
            .collect()
    }

    pub fn edge_keys(&self) -> HashSet<EdgeKey> {
        self.edges.iter().map(Edge::key).collect()
    }

    pub fn count_class(&self, class: EdgeClass) -> usize {
        self.edges.iter().filter(|e| e.class == class).count()
    }

    pub fn is_bipartite(&self) -> bool {
        let n = self.vertices.len();
        let mut adj = vec![Vec::new(); n];
        for (a, b, _) in self.site_edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut color = vec![None; n];
        for start in 0..n {
            if color[start].is_some() {
                continue;
            }
            color[start] = Some(false);
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                let cu = color[u].unwrap();
                for &w in &adj[u] {
                    match color[w] {
                        None => {
                            color[w] = Some(!cu);
                            stack.push(w);
                        }
                        Some(cw) if cw == cu => return false,
                        _ => {}
                    }
                }
            }
        }
        true
    }

    /// Mirror image under `x -> 1 - x`.
    pub fn reflected(&self) -> LatticeGraph {
        let flip = |v: Vertex| Vertex::new(1 - v.x, v.y);
        LatticeGraph {
            name: format!("{}_reflected", self.name),
            vertices: self.vertices.iter().map(|&v| flip(v)).collect(),
            edges: self.edges.iter().map(|e| Edge { a: flip(e.a), b: flip(e.b), class: e.class.mirrored(), ..*e }).collect(),
            vertical_period: self.vertical_period,
        }
    }

    /// One edge per line: `x1 y1 x2 y2 weight class`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            writeln!(out, "{} {} {} {} {} {}", e.a.x, e.a.y, e.b.x, e.b.y, e.weight, e.class.as_str())
                .expect("writing to a String");
        }
        out
    }
}

/// The periodic hexagonal chain of `n` hexagons.
pub fn hexagonal_chain(n: usize) -> Result<LatticeGraph> {
    if n < 2 {
        return domain(format!("hexagonal chain needs n >= 2, got {n}"));
    }
    let rows = 2 * n as i32;
    let vertices = (0..rows).flat_map(|y| [Vertex::new(0, y), Vertex::new(1, y)]).collect();
    let mut edges = Vec::with_capacity(5 * n);
    for y in 0..rows {
        for x in 0..2 {
            edges.push(column_edge(x, y, Some(rows)));
        }
        if y % 2 == 0 {
            edges.push(rung(y));
        }
    }
    LatticeGraph::new(format!("H_{n}"), vertices, edges, Some(rows))
}

/// Two-column window over rows `lo..=hi` with rungs on the listed rows.
fn window(name: &str, lo: i32, hi: i32, rungs: &[i32]) -> Result<LatticeGraph> {
    let vertices = (lo..=hi).flat_map(|y| [Vertex::new(0, y), Vertex::new(1, y)]).collect();
    let mut edges = Vec::new();
    for y in lo..=hi {
        if y < hi {
            edges.push(column_edge(0, y, None));
            edges.push(column_edge(1, y, None));
        }
        if rungs.contains(&y) {
            edges.push(rung(y));
        }
    }
    LatticeGraph::new(name.to_string(), vertices, edges, None)
}

/// Rows 1..=7 with rungs at 2, 4, 6: two hexagons and four dangling diagonals.
pub fn subsystem_a() -> LatticeGraph {
    window("A", 1, 7, &[2, 4, 6]).expect("fixed subsystem is valid")
}

/// Rows 0..=6 with rungs at 0, 2, 4, 6: three stacked hexagons.
pub fn subsystem_b() -> LatticeGraph {
    window("B", 0, 6, &[0, 2, 4, 6]).expect("fixed subsystem is valid")
}

fn column_path(name: String, x: i32, k: usize) -> Result<LatticeGraph> {
    if k < 2 {
        return domain(format!("C systems need K >= 2, got {k}"));
    }
    let k = k as i32;
    let vertices = (1..=k).map(|y| Vertex::new(x, y)).collect();
    let edges = (1..k).map(|y| column_edge(x, y, None)).collect();
    LatticeGraph::new(name, vertices, edges, None)
}

/// Open path on `(0, 1), ..., (0, K)`.
pub fn subsystem_c(k: usize) -> Result<LatticeGraph> {
    column_path(format!("C({k})"), 0, k)
}

/// Mirror of `C` in column 1.
pub fn subsystem_c_tilde(k: usize) -> Result<LatticeGraph> {
    column_path(format!("C~({k})"), 1, k)
}

/// Hexagonal sun: a 6-cycle with inner weight `a` and one pendant per vertex.
///
/// Ring vertex `i` (at angle `60 i` degrees) is `(0, i)`, its pendant `(1, i)`.
pub fn sun(a: f64) -> Result<LatticeGraph> {
    if !(a >= 1.0) {
        return domain(format!("sun weight must satisfy a >= 1, got {a}"));
    }
    use EdgeClass::{DiagDown as Dn, DiagUp as Up, Horizontal as Hz};
    const RING: [EdgeClass; 6] = [Dn, Hz, Up, Dn, Hz, Up];
    const RAYS: [EdgeClass; 6] = [Hz, Up, Dn, Hz, Up, Dn];
    let mut vertices: Vec<Vertex> = (0..6).map(|i| Vertex::new(0, i)).collect();
    vertices.extend((0..6).map(|i| Vertex::new(1, i)));
    let mut edges = Vec::with_capacity(12);
    for i in 0..6 {
        edges.push(Edge {
            a: Vertex::new(0, i),
            b: Vertex::new(0, (i + 1) % 6),
            weight: a,
            class: RING[i as usize],
            region: Region::Inner,
        });
    }
    for i in 0..6 {
        edges.push(Edge {
            a: Vertex::new(0, i),
            b: Vertex::new(1, i),
            weight: 1.0,
            class: RAYS[i as usize],
            region: Region::Outer,
        });
    }
    LatticeGraph::new(format!("sun(a={a})"), vertices, edges, None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
    C,
    CTilde,
    Sun,
}

impl FromStr for Subsystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Subsystem::A),
            "B" | "b" => Ok(Subsystem::B),
            "C" | "c" => Ok(Subsystem::C),
            "C_tilde" | "c_tilde" | "Ct" => Ok(Subsystem::CTilde),
            "sun" | "S" => Ok(Subsystem::Sun),
            other => domain(format!("unknown subsystem `{other}`")),
        }
    }
}

/// Builds a named subsystem. `k` is required for C systems, `a` defaults to 1 for the sun.
pub fn subsystem(kind: Subsystem, k: Option<usize>, a: Option<f64>) -> Result<LatticeGraph> {
    let need_k = || k.ok_or_else(|| Error::Domain("C systems require K".into()));
    match kind {
        Subsystem::A => Ok(subsystem_a()),
        Subsystem::B => Ok(subsystem_b()),
        Subsystem::C => subsystem_c(need_k()?),
        Subsystem::CTilde => subsystem_c_tilde(need_k()?),
        Subsystem::Sun => sun(a.unwrap_or(1.0)),
    }
}

/// Edge set of subsystem `kind` translated up by `s` rows inside `H_n`.
///
/// A and B only map onto the chain under whole-hexagon translations, so odd
/// `s` is rejected for them; C and C~ accept every row shift.
pub fn shift_subsystem(kind: Subsystem, k: Option<usize>, s: i64, n: usize) -> Result<Vec<Edge>> {
    let base = match kind {
        Subsystem::Sun => return domain("the sun is not a subsystem of the chain"),
        _ => subsystem(kind, k, None)?,
    };
    if matches!(kind, Subsystem::A | Subsystem::B) && s.rem_euclid(2) != 0 {
        return domain(format!("shift {s} of {kind:?} is not a lattice translation"));
    }
    let chain = hexagonal_chain(n)?;
    let rows = 2 * n as i64;
    let height = base.vertices.iter().map(|v| v.y).max().unwrap() - base.vertices.iter().map(|v| v.y).min().unwrap();
    if i64::from(height) >= rows {
        return domain(format!("{} does not fit in H_{n}", base.name));
    }
    let lift = |v: Vertex| Vertex::new(v.x, (i64::from(v.y) + s).rem_euclid(rows) as i32);
    let lookup: std::collections::HashMap<EdgeKey, Edge> = chain.edges.iter().map(|e| (e.key(), *e)).collect();
    base.edges
        .iter()
        .map(|e| {
            let moved = Edge { a: lift(e.a), b: lift(e.b), ..*e };
            lookup
                .get(&moved.key())
                .copied()
                .ok_or_else(|| Error::Structure(format!("shifted edge {}-{} not in H_{n}", moved.a, moved.b)))
        })
        .collect()
}

/// Relation between two chain edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairClass {
    /// Two column edges meeting at a rung vertex.
    WedgeLeft,
    /// Two column edges meeting at an outer (rung-free) vertex.
    WedgeRight,
    /// A column edge meeting a rung.
    DiagHorizontal,
    Disjoint,
    Identical,
}

impl PairClass {
    pub fn shares_vertex(self) -> bool {
        matches!(self, PairClass::WedgeLeft | PairClass::WedgeRight | PairClass::DiagHorizontal)
    }
}

/// Classifies a pair of chain edges; the apex parity follows the even-row rung convention.
pub fn classify_edge_pair(e: &Edge, f: &Edge) -> PairClass {
    if e.key() == f.key() {
        return PairClass::Identical;
    }
    match e.shared_vertex(f) {
        None => PairClass::Disjoint,
        Some(_) if !e.class.is_diagonal() || !f.class.is_diagonal() => PairClass::DiagHorizontal,
        Some(apex) if apex.y.rem_euclid(2) == 0 => PairClass::WedgeLeft,
        Some(_) => PairClass::WedgeRight,
    }
}
