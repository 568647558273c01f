//! Graph representation and the edit operations the bound constructions need.
//!
//! Vertices are 0-based everywhere in the API; the 1-based DIMACS/JSON
//! convention is translated at the parse/emit boundary only (see [`crate::io`]).
//! Storage is dense (one adjacency bitmask per vertex), with a hard cap of 64
//! vertices — the conic programs built on top of a graph grow much faster than
//! the graph itself, so larger inputs are refused up front rather than
//! accepted and then stalled on.

use crate::matrix::SymMatrix;
use thiserror::Error;

/// Hard vertex-count cap implied by the one-word adjacency rows.
pub const MAX_VERTICES: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph has {0} vertices; at most {MAX_VERTICES} are supported")]
    TooManyVertices(usize),
    #[error("vertex {v} out of range 0..{n}")]
    VertexOutOfRange { v: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("{{{0}, {1}}} is not an edge")]
    NotAnEdge(usize, usize),
    #[error("vertex {0} lies in the set S; N_S(j) requires j outside S")]
    VertexInSet(usize),
}

/// An undirected simple graph on vertices `0..n`.
///
/// Immutable after construction: every edit operation returns a new graph, so
/// values can be shared freely across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    /// Sorted list of edges `(u, v)` with `u < v`.
    edges: Vec<(usize, usize)>,
    /// `adj[u]` has bit `v` set iff `{u,v}` is an edge.
    adj: Vec<u64>,
}

impl Graph {
    /// Builds a graph from an edge list. Unordered duplicates are merged
    /// silently; self-loops and out-of-range endpoints are rejected.
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        if n > MAX_VERTICES {
            return Err(GraphError::TooManyVertices(n));
        }
        let mut adj = vec![0u64; n];
        let mut list = Vec::new();
        for (a, b) in edges {
            if a >= n {
                return Err(GraphError::VertexOutOfRange { v: a, n });
            }
            if b >= n {
                return Err(GraphError::VertexOutOfRange { v: b, n });
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if adj[u] >> v & 1 == 0 {
                adj[u] |= 1 << v;
                adj[v] |= 1 << u;
                list.push((u, v));
            }
        }
        list.sort_unstable();
        Ok(Graph { n, edges: list, adj })
    }

    /// The edgeless graph on `n` vertices.
    pub fn empty(n: usize) -> Self {
        Graph::new(n, []).expect("empty graph within size cap")
    }

    /// The complete graph `K_n`.
    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Graph::new(n, edges).expect("complete graph within size cap")
    }

    /// The cycle `C_n` (`n >= 3`).
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 vertices");
        Graph::new(n, (0..n).map(|u| (u, (u + 1) % n))).expect("cycle within size cap")
    }

    /// The path on `n` vertices (`n - 1` edges).
    pub fn path(n: usize) -> Self {
        Graph::new(n, (1..n).map(|u| (u - 1, u))).expect("path within size cap")
    }

    /// Complete multipartite graph with the given part sizes.
    pub fn complete_multipartite(parts: &[usize]) -> Self {
        let n: usize = parts.iter().sum();
        let mut part_of = Vec::with_capacity(n);
        for (idx, &size) in parts.iter().enumerate() {
            part_of.extend(std::iter::repeat(idx).take(size));
        }
        let edges = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| part_of[u] != part_of[v]);
        Graph::new(n, edges).expect("multipartite graph within size cap")
    }

    /// The Petersen graph: outer 5-cycle 0–4, spokes to 5–9, inner pentagram.
    pub fn petersen() -> Self {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        Graph::new(10, edges).expect("petersen graph")
    }

    /// The icosahedron graph (12 vertices, 5-regular).
    pub fn icosahedron() -> Self {
        let rows: [(usize, [usize; 5]); 6] = [
            (0, [1, 2, 3, 4, 5]),
            (1, [2, 5, 6, 7, 0]),
            (2, [3, 7, 8, 0, 1]),
            (3, [4, 8, 9, 0, 2]),
            (4, [5, 9, 10, 0, 3]),
            (5, [6, 10, 1, 0, 4]),
        ];
        let mut edges = Vec::new();
        for (u, nbrs) in rows {
            for v in nbrs {
                edges.push((u, v));
            }
        }
        // Bottom cap: 11 joins the lower pentagon 6..=10, which is a cycle.
        for i in 0..5 {
            edges.push((6 + i, 6 + (i + 1) % 5));
            edges.push((11, 6 + i));
        }
        Graph::new(12, edges).expect("icosahedron graph")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of edges.
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Edges as sorted `(u, v)` pairs with `u < v`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.adj[u] >> v & 1 == 1
    }

    /// Adjacency bitmask of `u`.
    pub fn adj_mask(&self, u: usize) -> u64 {
        self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].count_ones() as usize
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        let mask = self.adj[u];
        (0..self.n).filter(move |v| mask >> v & 1 == 1)
    }

    /// Bitmask with one bit per vertex.
    pub fn full_mask(&self) -> u64 {
        if self.n == 64 {
            u64::MAX
        } else {
            (1u64 << self.n) - 1
        }
    }

    /// The 0/1 adjacency matrix `A_G`.
    pub fn adjacency_matrix(&self) -> SymMatrix {
        SymMatrix::from_fn(self.n, |i, j| if self.has_edge(i, j) { 1.0 } else { 0.0 })
    }

    /// Removes one edge; it is an error if `{u,v}` is not present.
    pub fn delete_edge(&self, u: usize, v: usize) -> Result<Graph, GraphError> {
        if !self.has_edge(u, v) {
            return Err(GraphError::NotAnEdge(u, v));
        }
        let e = if u < v { (u, v) } else { (v, u) };
        Graph::new(self.n, self.edges.iter().copied().filter(|&f| f != e))
    }

    /// Induced subgraph `G[U]`; vertices are relabeled `0..|U|` in the sorted
    /// order of `U` (duplicates in `U` are merged).
    pub fn induced_subgraph(&self, u: &[usize]) -> Result<Graph, GraphError> {
        let mut verts: Vec<usize> = u.to_vec();
        verts.sort_unstable();
        verts.dedup();
        if let Some(&v) = verts.iter().find(|&&v| v >= self.n) {
            return Err(GraphError::VertexOutOfRange { v, n: self.n });
        }
        let index_of = |v: usize| verts.binary_search(&v).unwrap();
        let edges = self
            .edges
            .iter()
            .filter(|(a, b)| verts.binary_search(a).is_ok() && verts.binary_search(b).is_ok())
            .map(|&(a, b)| (index_of(a), index_of(b)));
        Graph::new(verts.len(), edges)
    }

    /// The complement graph.
    pub fn complement(&self) -> Graph {
        let edges = (0..self.n)
            .flat_map(|u| (u + 1..self.n).map(move |v| (u, v)))
            .filter(|&(u, v)| !self.has_edge(u, v));
        Graph::new(self.n, edges).expect("complement preserves size")
    }

    /// Disjoint union; the second graph's vertices are shifted by `self.n`.
    pub fn disjoint_union(&self, other: &Graph) -> Result<Graph, GraphError> {
        let n = self.n + other.n;
        let edges = self
            .edges
            .iter()
            .copied()
            .chain(other.edges.iter().map(|&(u, v)| (u + self.n, v + self.n)));
        Graph::new(n, edges)
    }

    /// Adds `k` isolated vertices.
    pub fn add_isolated(&self, k: usize) -> Result<Graph, GraphError> {
        Graph::new(self.n + k, self.edges.iter().copied())
    }

    /// `N_S(j)`: the neighbors of `j` inside `S`, for `j` outside `S`.
    pub fn neighbors_in_set(&self, s: &[usize], j: usize) -> Result<Vec<usize>, GraphError> {
        if j >= self.n {
            return Err(GraphError::VertexOutOfRange { v: j, n: self.n });
        }
        if let Some(&v) = s.iter().find(|&&v| v >= self.n) {
            return Err(GraphError::VertexOutOfRange { v, n: self.n });
        }
        if s.contains(&j) {
            return Err(GraphError::VertexInSet(j));
        }
        let mut out: Vec<usize> = s.iter().copied().filter(|&v| self.has_edge(v, j)).collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// `deg_S(j) = |N_S(j)|`.
    pub fn degree_in_set(&self, s: &[usize], j: usize) -> Result<usize, GraphError> {
        Ok(self.neighbors_in_set(s, j)?.len())
    }

    /// True if no two vertices of `set` (given as a bitmask) are adjacent.
    pub fn is_stable_mask(&self, set: u64) -> bool {
        let mut rest = set;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if self.adj[v] & rest != 0 {
                return false;
            }
        }
        true
    }

    /// True if every two vertices of `set` are adjacent.
    pub fn is_clique_mask(&self, set: u64) -> bool {
        let mut rest = set;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if self.adj[v] & rest != rest {
                return false;
            }
        }
        true
    }

    /// Connected components of the subgraph induced by `mask`, each returned
    /// as a bitmask, ordered by lowest vertex.
    pub fn components_of_mask(&self, mask: u64) -> Vec<u64> {
        let mut remaining = mask;
        let mut comps = Vec::new();
        while remaining != 0 {
            let start = remaining.trailing_zeros() as usize;
            let mut comp = 1u64 << start;
            loop {
                let mut grown = comp;
                let mut scan = comp;
                while scan != 0 {
                    let v = scan.trailing_zeros() as usize;
                    scan &= scan - 1;
                    grown |= self.adj[v] & mask;
                }
                if grown == comp {
                    break;
                }
                comp = grown;
            }
            comps.push(comp);
            remaining &= !comp;
        }
        comps
    }
}

/// Expands a bitmask into a sorted vertex list.
pub fn mask_to_vec(mask: u64) -> Vec<usize> {
    (0..64).filter(|v| mask >> v & 1 == 1).collect()
}

/// Collapses a vertex list into a bitmask.
pub fn vec_to_mask(verts: &[usize]) -> u64 {
    verts.iter().fold(0u64, |m, &v| m | 1 << v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_merges_duplicates_and_rejects_loops() {
        let g = Graph::new(3, [(0, 1), (1, 0), (1, 2)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(Graph::new(2, [(0, 0)]), Err(GraphError::SelfLoop(0)));
        assert_eq!(
            Graph::new(2, [(0, 5)]),
            Err(GraphError::VertexOutOfRange { v: 5, n: 2 })
        );
    }

    #[test]
    fn adjacency_matrix_examples() {
        let single = Graph::new(2, [(0, 1)]).unwrap().adjacency_matrix();
        assert_eq!(single.get(0, 1), 1.0);
        assert_eq!(single.get(1, 0), 1.0);
        assert_eq!(single.get(0, 0), 0.0);

        let empty = Graph::empty(3).adjacency_matrix();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(empty.get(i, j), 0.0);
            }
        }

        // C5: first row is (0,1,0,0,1).
        let c5 = Graph::cycle(5).adjacency_matrix();
        let first: Vec<f64> = (0..5).map(|j| c5.get(0, j)).collect();
        assert_eq!(first, vec![0.0, 1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn delete_edge_gives_path_from_cycle() {
        let p5 = Graph::cycle(5).delete_edge(0, 1).unwrap();
        assert_eq!(p5.m(), 4);
        // Path endpoints have degree 1.
        assert_eq!(p5.degree(0), 1);
        assert_eq!(p5.degree(1), 1);
        assert_eq!(
            Graph::cycle(5).delete_edge(0, 2),
            Err(GraphError::NotAnEdge(0, 2))
        );
    }

    #[test]
    fn complement_of_complete_is_empty() {
        assert_eq!(Graph::complete(4).complement(), Graph::empty(4));
    }

    #[test]
    fn complement_is_involutive() {
        for g in [Graph::cycle(6), Graph::petersen(), Graph::path(4)] {
            assert_eq!(g.complement().complement(), g);
        }
    }

    #[test]
    fn add_isolated_gives_cycle_plus_node() {
        let h1 = Graph::cycle(5).add_isolated(1).unwrap();
        assert_eq!(h1.n(), 6);
        assert_eq!(h1.m(), 5);
        assert_eq!(h1.degree(5), 0);
    }

    #[test]
    fn neighbors_in_set_on_c5() {
        let c5 = Graph::cycle(5);
        assert_eq!(c5.neighbors_in_set(&[0, 2], 1).unwrap(), vec![0, 2]);
        assert_eq!(c5.neighbors_in_set(&[0, 2], 4).unwrap(), vec![0]);
        assert_eq!(
            c5.neighbors_in_set(&[0, 2], 2),
            Err(GraphError::VertexInSet(2))
        );
        assert_eq!(
            Graph::empty(4).neighbors_in_set(&[0, 1], 3).unwrap(),
            Vec::<usize>::new()
        );
    }

    #[test]
    fn deleted_edge_changes_exactly_two_matrix_entries() {
        let g = Graph::petersen();
        let (u, v) = g.edges()[3];
        let a = g.adjacency_matrix();
        let b = g.delete_edge(u, v).unwrap().adjacency_matrix();
        let mut diffs = Vec::new();
        for i in 0..g.n() {
            for j in 0..g.n() {
                if a.get(i, j) != b.get(i, j) {
                    diffs.push((i, j));
                }
            }
        }
        assert_eq!(diffs, vec![(u, v), (v, u)]);
    }

    #[test]
    fn induced_subgraph_relabels_in_sorted_order() {
        let g = Graph::cycle(5);
        let h = g.induced_subgraph(&[4, 0, 1]).unwrap();
        // Sorted U = [0,1,4]; edges {0,1} and {0,4} survive as (0,1),(0,2).
        assert_eq!(h.edges(), &[(0, 1), (0, 2)]);
    }

    #[test]
    fn disjoint_union_offsets_second_graph() {
        let g = Graph::complete(3).disjoint_union(&Graph::complete(3)).unwrap();
        assert_eq!(g.n(), 6);
        assert_eq!(g.m(), 6);
        assert!(g.has_edge(3, 4) && !g.has_edge(2, 3));
    }

    #[test]
    fn named_graphs_have_expected_degrees() {
        let p = Graph::petersen();
        assert!(p.n() == 10 && p.m() == 15);
        assert!((0..10).all(|v| p.degree(v) == 3));

        let ico = Graph::icosahedron();
        assert!(ico.n() == 12 && ico.m() == 30);
        assert!((0..12).all(|v| ico.degree(v) == 5));
        // Every edge lies on a triangle (icosahedron faces are triangles).
        for &(u, v) in ico.edges() {
            assert!(
                (0..12).any(|w| ico.has_edge(u, w) && ico.has_edge(v, w)),
                "edge ({u},{v}) not on a triangle"
            );
        }

        let k234 = Graph::complete_multipartite(&[2, 3, 4]);
        assert_eq!(k234.n(), 9);
        assert_eq!(k234.m(), 2 * 3 + 2 * 4 + 3 * 4);
    }

    #[test]
    fn stable_and_clique_masks() {
        let c5 = Graph::cycle(5);
        assert!(c5.is_stable_mask(vec_to_mask(&[0, 2])));
        assert!(!c5.is_stable_mask(vec_to_mask(&[0, 1])));
        assert!(Graph::complete(4).is_clique_mask(vec_to_mask(&[0, 1, 3])));
        assert!(!c5.is_clique_mask(vec_to_mask(&[0, 1, 2])));
        // Empty and singleton sets are both stable and cliques.
        assert!(c5.is_stable_mask(0) && c5.is_clique_mask(0));
        assert!(c5.is_stable_mask(1) && c5.is_clique_mask(1));
    }

    #[test]
    fn components_of_mask_splits_disjoint_parts() {
        let g = Graph::complete(3).disjoint_union(&Graph::complete(2)).unwrap();
        let comps = g.components_of_mask(g.full_mask());
        assert_eq!(comps, vec![vec_to_mask(&[0, 1, 2]), vec_to_mask(&[3, 4])]);
    }
}
