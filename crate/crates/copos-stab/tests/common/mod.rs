//! Shared fixtures for the integration suites: the named graph corpus and a
//! couple of helpers used across test files.
//!
//! Each test binary compiles its own copy and uses a different subset, so
//! per-binary dead-code analysis would flag whichever helpers that binary
//! happens not to call.
#![allow(dead_code)]

use copos_stab::graph::Graph;
use copos_stab::solver::SolverConfig;
use copos_stab::sos::{BoundResult, BoundValue};
use rand::Rng;

/// Five-cycle with a pendant vertex attached (n = 6): stability number 3,
/// clique cover 3.
pub fn pendant_c5() -> Graph {
    Graph::new(6, vec![(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 5)])
        .expect("pendant five-cycle")
}

/// Five-cycle plus one isolated vertex: what `pendant_c5` becomes when the
/// pendant edge is deleted.
pub fn c5_isolated() -> Graph {
    Graph::cycle(5).add_isolated(1).expect("c5 plus isolated")
}

/// Three pairwise disjoint edges (n = 6).
pub fn three_edges() -> Graph {
    Graph::new(6, vec![(2, 3), (0, 4), (1, 5)]).expect("three disjoint edges")
}

/// Path 1-3, plus vertex 2 adjacent to 4 and 5 (n = 5): the point with mass
/// split over {1, 2} is stationary but not a local minimizer.
pub fn two_chords() -> Graph {
    Graph::new(5, vec![(0, 2), (1, 3), (1, 4)]).expect("two chords")
}

pub fn two_triangles() -> Graph {
    Graph::complete(3)
        .disjoint_union(&Graph::complete(3))
        .expect("two disjoint triangles")
}

/// The named corpus every corpus-wide check runs over.
pub fn corpus() -> Vec<(&'static str, Graph)> {
    vec![
        ("C5", Graph::cycle(5)),
        ("C6", Graph::cycle(6)),
        ("P4", Graph::path(4)),
        ("K4", Graph::complete(4)),
        ("K4-complement", Graph::empty(4)),
        ("Petersen", Graph::petersen()),
        ("icosahedron-complement", Graph::icosahedron().complement()),
        ("pendant-C5", pendant_c5()),
        ("C5-isolated", c5_isolated()),
        ("three-edges", three_edges()),
        ("two-chords", two_chords()),
        ("two-triangles", two_triangles()),
        ("K234", Graph::complete_multipartite(&[2, 3, 4])),
    ]
}

pub fn cfg() -> SolverConfig {
    SolverConfig::default()
}

pub fn finite(b: &BoundResult) -> f64 {
    match b.value {
        BoundValue::Finite { value } => value,
        ref other => panic!("expected a finite bound, got {other:?}"),
    }
}

/// Erdős–Rényi draw with edge probability 1/2 from the caller's rng.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(0.5) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges).expect("random graph")
}

/// Stability number by direct subset enumeration; the independent check the
/// library's own search is measured against.
pub fn alpha_brute_force(g: &Graph) -> usize {
    let n = g.n();
    let mut best = 0;
    for mask in 0u64..(1 << n) {
        if g.is_stable_mask(mask) {
            best = best.max(mask.count_ones() as usize);
        }
    }
    best
}
