//! Small test graphs and a full-space reference gap.
#![allow(dead_code)]

use hexgap::eigensolve::symmetric_spectrum;
use hexgap::hamiltonian::full_space_dense;
use hexgap::lattice::{Edge, EdgeClass, LatticeGraph, Region, Vertex};
use hexgap::spin::SpinValue;

pub const S: SpinValue = SpinValue::THREE_HALVES;
pub const KERNEL_TOL: f64 = 1e-8;

pub fn edge(a: (i32, i32), b: (i32, i32), weight: f64, class: EdgeClass) -> Edge {
    Edge { a: Vertex::new(a.0, a.1), b: Vertex::new(b.0, b.1), weight, class, region: Region::None }
}

/// A vertex of degree 3 with three leaves.
pub fn star() -> LatticeGraph {
    let e = vec![
        edge((0, 0), (0, 1), 1.0, EdgeClass::DiagUp),
        edge((0, 0), (0, -1), 1.0, EdgeClass::DiagDown),
        edge((0, 0), (1, 0), 1.0, EdgeClass::Horizontal),
    ];
    let v = [(0, 0), (0, 1), (0, -1), (1, 0)].map(|(x, y)| Vertex::new(x, y)).to_vec();
    LatticeGraph::new("star".into(), v, e, None).unwrap()
}

/// `n`-cycle with uniform weight.
pub fn ring(n: i32, weight: f64) -> LatticeGraph {
    let v: Vec<Vertex> = (0..n).map(|i| Vertex::new(0, i)).collect();
    let e = (0..n).map(|i| edge((0, i), (0, (i + 1) % n), weight, EdgeClass::DiagUp)).collect();
    LatticeGraph::new(format!("ring{n}(w={weight})"), v, e, None).unwrap()
}

/// Weighted 6-cycle with pendants on two adjacent ring sites: 8 sites.
pub fn truncated_sun(a: f64) -> LatticeGraph {
    let mut g = ring(6, a);
    g.vertices.extend([Vertex::new(1, 0), Vertex::new(1, 1)]);
    g.edges.push(edge((0, 0), (1, 0), 1.0, EdgeClass::Horizontal));
    g.edges.push(edge((0, 1), (1, 1), 1.0, EdgeClass::Horizontal));
    LatticeGraph::new(format!("sun8(a={a})"), g.vertices, g.edges, None).unwrap()
}

/// Smallest eigenvalue above the kernel tolerance of the full tensor-product Hamiltonian.
pub fn dense_full_gap(g: &LatticeGraph) -> f64 {
    symmetric_spectrum(full_space_dense(g, S, 3).unwrap()).into_iter().find(|&x| x > KERNEL_TOL).unwrap()
}
