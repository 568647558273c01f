//! Exact combinatorial oracles: stability numbers, stable-set catalogs, edge
//! criticality, clique covers, and the discrete quadratic minimum that drives
//! the linear bound hierarchy. Everything in this module is exact — integer
//! and rational arithmetic only, no floating point.

use std::collections::HashSet;

use num::rational::BigRational;
use num::{BigInt, One, Signed};
use serde::Serialize;
use thiserror::Error;

use crate::graph::{mask_to_vec, Graph};
use crate::monomials::{count_exact_monomials, for_each_exact_degree};

/// Stable-set catalogs are refused above this vertex count: the output can be
/// exponential and the intended scale of this library is small graphs.
pub const CATALOG_MAX_VERTICES: usize = 30;

/// `beta_star_enumerate` is refused when `|I(n, r+2)|` exceeds this.
pub const EXPONENT_ENUMERATION_CAP: u128 = 2_000_000;

/// The non-isomorphic catalog stops here (1044 graphs on 7 vertices).
pub const NONISOMORPHIC_MAX_VERTICES: usize = 7;

#[derive(Debug, Error)]
pub enum CombinatoricsError {
    #[error(
        "refusing to enumerate stable sets on {n} vertices (limit {CATALOG_MAX_VERTICES}); \
         the catalog can be exponentially large"
    )]
    CatalogTooLarge { n: usize },
    #[error(
        "refusing to enumerate {count} exponent vectors (limit {EXPONENT_ENUMERATION_CAP}); \
         raise r or n only with the closed form"
    )]
    EnumerationTooLarge { count: u128 },
    #[error(
        "non-isomorphic graph catalogs are available for 1 ≤ n ≤ {NONISOMORPHIC_MAX_VERTICES} \
         (requested n = {n})"
    )]
    NonisomorphicUnsupported { n: usize },
}

/// Exact stability number α(G) by branch and bound.
///
/// Branching picks the available vertex of maximum available-degree (lowest
/// index on ties); the upper bound is a greedy clique cover of the remaining
/// vertices. Exact for every input; designed for n ≤ 64.
pub fn stability_number(g: &Graph) -> usize {
    let mut best = 0usize;
    alpha_branch(g, g.full_mask(), 0, &mut best);
    best
}

fn alpha_branch(g: &Graph, avail: u64, picked: usize, best: &mut usize) {
    if avail == 0 {
        *best = (*best).max(picked);
        return;
    }
    if picked + greedy_clique_cover_count(g, avail) <= *best {
        return;
    }
    let v = branch_vertex(g, avail);
    // Include v first: good incumbents early make the cover bound bite.
    alpha_branch(g, avail & !(g.adj_mask(v) | (1 << v)), picked + 1, best);
    alpha_branch(g, avail & !(1 << v), picked, best);
}

/// Vertex of maximum degree within `avail`, lowest index on ties.
fn branch_vertex(g: &Graph, avail: u64) -> usize {
    let mut best_v = avail.trailing_zeros() as usize;
    let mut best_deg = (g.adj_mask(best_v) & avail).count_ones();
    let mut rest = avail & !(1 << best_v);
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let deg = (g.adj_mask(v) & avail).count_ones();
        if deg > best_deg {
            best_deg = deg;
            best_v = v;
        }
    }
    best_v
}

/// Number of cliques in a greedy cover of `avail`; an upper bound on the
/// number of stable-set vertices that can still be chosen from `avail`.
fn greedy_clique_cover_count(g: &Graph, mut avail: u64) -> usize {
    let mut count = 0;
    while avail != 0 {
        count += 1;
        let v = avail.trailing_zeros() as usize;
        let mut clique = 1u64 << v;
        let mut cand = avail & g.adj_mask(v);
        while cand != 0 {
            let u = cand.trailing_zeros() as usize;
            clique |= 1 << u;
            cand &= g.adj_mask(u);
        }
        avail &= !clique;
    }
    count
}

/// All maximum stable sets, each sorted ascending, the list sorted
/// lexicographically. Refuses graphs with more than [`CATALOG_MAX_VERTICES`]
/// vertices.
pub fn maximum_stable_sets(g: &Graph) -> Result<Vec<Vec<usize>>, CombinatoricsError> {
    if g.n() > CATALOG_MAX_VERTICES {
        return Err(CombinatoricsError::CatalogTooLarge { n: g.n() });
    }
    let alpha = stability_number(g);
    let mut out = Vec::new();
    collect_of_size(g, g.full_mask(), 0, alpha, &mut out);
    let mut sets: Vec<Vec<usize>> = out.into_iter().map(mask_to_vec).collect();
    sets.sort();
    Ok(sets)
}

fn collect_of_size(g: &Graph, avail: u64, picked: u64, need: usize, out: &mut Vec<u64>) {
    let have = picked.count_ones() as usize;
    if have == need {
        out.push(picked);
        return;
    }
    if avail == 0 || have + greedy_clique_cover_count(g, avail) < need {
        return;
    }
    let v = branch_vertex(g, avail);
    collect_of_size(g, avail & !(g.adj_mask(v) | (1 << v)), picked | (1 << v), need, out);
    collect_of_size(g, avail & !(1 << v), picked, need, out);
}

/// All maximal stable sets (Bron–Kerbosch with pivoting on non-adjacency),
/// sorted like [`maximum_stable_sets`].
pub fn maximal_stable_sets(g: &Graph) -> Result<Vec<Vec<usize>>, CombinatoricsError> {
    if g.n() > CATALOG_MAX_VERTICES {
        return Err(CombinatoricsError::CatalogTooLarge { n: g.n() });
    }
    let full = g.full_mask();
    // Non-adjacency masks: stable sets of G are cliques in the complement.
    let nonadj: Vec<u64> = (0..g.n())
        .map(|v| full & !g.adj_mask(v) & !(1u64 << v))
        .collect();
    let mut out = Vec::new();
    bron_kerbosch(&nonadj, 0, full, 0, &mut out);
    let mut sets: Vec<Vec<usize>> = out.into_iter().map(mask_to_vec).collect();
    sets.sort();
    Ok(sets)
}

fn bron_kerbosch(nonadj: &[u64], r: u64, p: u64, x: u64, out: &mut Vec<u64>) {
    if p == 0 && x == 0 {
        out.push(r);
        return;
    }
    // Pivot: vertex of P ∪ X covering the most of P, lowest index on ties.
    let mut pivot = usize::MAX;
    let mut covered = 0u32;
    let mut scan = p | x;
    while scan != 0 {
        let u = scan.trailing_zeros() as usize;
        scan &= scan - 1;
        let c = (p & nonadj[u]).count_ones();
        if pivot == usize::MAX || c > covered {
            pivot = u;
            covered = c;
        }
    }
    let mut cand = p & !nonadj[pivot];
    let mut p = p;
    let mut x = x;
    while cand != 0 {
        let v = cand.trailing_zeros() as usize;
        cand &= cand - 1;
        let bit = 1u64 << v;
        bron_kerbosch(nonadj, r | bit, p & nonadj[v], x & nonadj[v], out);
        p &= !bit;
        x |= bit;
    }
}

/// Whether deleting `{u, v}` raises the stability number (it can only rise by
/// exactly one). Errors if `{u, v}` is not an edge.
pub fn is_critical_edge(g: &Graph, u: usize, v: usize) -> Result<bool, crate::graph::GraphError> {
    let deleted = g.delete_edge(u, v)?;
    Ok(stability_number(&deleted) > stability_number(g))
}

/// The critical edges of `g` in canonical (sorted) order.
pub fn critical_edges(g: &Graph) -> Vec<(usize, usize)> {
    let alpha = stability_number(g);
    g.edges()
        .iter()
        .copied()
        .filter(|&(u, v)| {
            let deleted = g.delete_edge(u, v).expect("edge list entry is an edge");
            stability_number(&deleted) > alpha
        })
        .collect()
}

/// Edge-criticality classification of a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CriticalityClass {
    /// Every edge is critical (odd cycles, complete graphs, ...).
    Critical,
    /// No edge is critical (even cycles, the Petersen graph, ...).
    Acritical,
    /// Some edges critical, some not.
    Mixed,
    /// No edges at all; the distinction is vacuous.
    EdgelessTrivial,
}

pub fn criticality_class(g: &Graph) -> CriticalityClass {
    let m = g.edges().len();
    if m == 0 {
        return CriticalityClass::EdgelessTrivial;
    }
    let crit = critical_edges(g).len();
    if crit == m {
        CriticalityClass::Critical
    } else if crit == 0 {
        CriticalityClass::Acritical
    } else {
        CriticalityClass::Mixed
    }
}

/// Exact clique cover number = chromatic number of the complement, by
/// DSATUR-style branch and bound between the exact lower bound α(G) and a
/// greedy upper bound.
pub fn clique_cover_number(g: &Graph) -> usize {
    let h = g.complement();
    let n = h.n();
    if n == 0 {
        return 0;
    }
    let lower = stability_number(g); // = clique number of the complement
    let upper = greedy_coloring_count(&h);
    for k in lower..upper {
        let mut colors = vec![usize::MAX; n];
        if dsatur_colorable(&h, k, &mut colors, 0) {
            return k;
        }
    }
    upper
}

fn greedy_coloring_count(h: &Graph) -> usize {
    let mut colors = vec![usize::MAX; h.n()];
    let mut used = 0;
    for v in 0..h.n() {
        let mut forbidden = 0u64;
        let mut nb = h.adj_mask(v);
        while nb != 0 {
            let u = nb.trailing_zeros() as usize;
            nb &= nb - 1;
            if colors[u] != usize::MAX {
                forbidden |= 1 << colors[u];
            }
        }
        let c = (!forbidden).trailing_zeros() as usize;
        colors[v] = c;
        used = used.max(c + 1);
    }
    used
}

fn dsatur_colorable(h: &Graph, k: usize, colors: &mut [usize], assigned: usize) -> bool {
    let n = h.n();
    if assigned == n {
        return true;
    }
    // Most saturated uncolored vertex; ties by degree, then lowest index.
    let mut pick = usize::MAX;
    let mut pick_sat = 0u32;
    let mut pick_deg = 0u32;
    for v in 0..n {
        if colors[v] != usize::MAX {
            continue;
        }
        let mut sat_mask = 0u64;
        let mut nb = h.adj_mask(v);
        while nb != 0 {
            let u = nb.trailing_zeros() as usize;
            nb &= nb - 1;
            if colors[u] != usize::MAX {
                sat_mask |= 1 << colors[u];
            }
        }
        let sat = sat_mask.count_ones();
        let deg = h.adj_mask(v).count_ones();
        if pick == usize::MAX || sat > pick_sat || (sat == pick_sat && deg > pick_deg) {
            pick = v;
            pick_sat = sat;
            pick_deg = deg;
        }
    }
    let v = pick;
    let mut forbidden = 0u64;
    let mut nb = h.adj_mask(v);
    while nb != 0 {
        let u = nb.trailing_zeros() as usize;
        nb &= nb - 1;
        if colors[u] != usize::MAX {
            forbidden |= 1 << colors[u];
        }
    }
    // Symmetry breaking: allow at most one fresh color.
    let max_used = colors.iter().filter(|&&c| c != usize::MAX).map(|&c| c + 1).max().unwrap_or(0);
    for c in 0..k.min(max_used + 1) {
        if forbidden & (1 << c) != 0 {
            continue;
        }
        colors[v] = c;
        if dsatur_colorable(h, k, colors, assigned + 1) {
            return true;
        }
        colors[v] = usize::MAX;
    }
    false
}

/// One step of the criticality-query reduction: each edge, in canonical
/// order, is queried for criticality in the *current* graph and then deleted
/// unconditionally.
pub type CriticalQueryTrace = Vec<((usize, usize), bool)>;

/// Computes α(G) using only an edge-criticality oracle: process edges in
/// canonical order, query, delete; every critical answer raises the running
/// stability number by one, and the empty graph at the end has α = n.
/// Returns `(alpha, trace)` where the trace records each query and answer.
pub fn alpha_via_critical_edge_queries(g: &Graph) -> (usize, CriticalQueryTrace) {
    let mut current = g.clone();
    let mut trace = CriticalQueryTrace::new();
    let mut critical_answers = 0usize;
    for &(u, v) in g.edges() {
        let answer = is_critical_edge(&current, u, v).expect("edge still present when queried");
        trace.push(((u, v), answer));
        if answer {
            critical_answers += 1;
        }
        current = current.delete_edge(u, v).expect("edge still present when deleted");
    }
    (g.n() - critical_answers, trace)
}

/// Closed form for the discrete minimum
/// `β* = min { βᵀ(I + A_G)β : β ∈ I(n, r+2) }`:
/// with k = min(α, r+2), q = ⌊(r+2)/k⌋ and s = (r+2) − qk, the minimum is
/// attained by spreading r+2 units as evenly as possible over a maximum
/// stable set, giving β* = s(q+1)² + (k−s)q².
pub fn beta_star(g: &Graph, r: usize) -> u64 {
    beta_star_from_alpha(stability_number(g), r)
}

/// Same closed form with the stability number supplied by the caller.
pub fn beta_star_from_alpha(alpha: usize, r: usize) -> u64 {
    assert!(alpha >= 1, "graphs have at least one vertex");
    let total = (r + 2) as u64;
    let k = (alpha as u64).min(total);
    let q = total / k;
    let s = total - q * k;
    s * (q + 1) * (q + 1) + (k - s) * q * q
}

/// Result of the exhaustive check behind [`beta_star`].
#[derive(Debug, Clone)]
pub struct BetaStarEnumeration {
    /// Exact minimum of `Σβᵢ² + (1+ε)·βᵀA_Gβ` over `I(n, r+2)`.
    pub min: BigRational,
    /// First exponent vector attaining it, in enumeration order.
    pub argmin: Vec<u8>,
}

/// Enumerates every `β ∈ I(n, r+2)` and minimizes the perturbed quadratic
/// exactly. For every ε ≥ 0 the minimum equals the closed form: any mass on
/// an edge can be shifted to one endpoint without increasing the value
/// (the quadratic is linear along edge directions when ε = 0, and the edge
/// term only shrinks when ε > 0), so some minimizer has stable support.
pub fn beta_star_enumerate(
    g: &Graph,
    r: usize,
    eps: &BigRational,
) -> Result<BetaStarEnumeration, CombinatoricsError> {
    assert!(!eps.is_negative(), "perturbation must be nonnegative");
    let count = count_exact_monomials(g.n(), r + 2);
    if count > EXPONENT_ENUMERATION_CAP {
        return Err(CombinatoricsError::EnumerationTooLarge { count });
    }
    let edges = g.edges().to_vec();
    let one_plus_eps = BigRational::one() + eps;
    let mut best: Option<(BigRational, Vec<u8>)> = None;
    for_each_exact_degree(g.n(), r + 2, |beta| {
        let mut squares = 0u64;
        for &b in beta {
            squares += (b as u64) * (b as u64);
        }
        let mut cross = 0u64;
        for &(u, v) in &edges {
            cross += 2 * (beta[u] as u64) * (beta[v] as u64);
        }
        let value = BigRational::from(BigInt::from(squares))
            + &one_plus_eps * BigRational::from(BigInt::from(cross));
        match &best {
            Some((cur, _)) if *cur <= value => {}
            _ => best = Some((value, beta.to_vec())),
        }
    });
    let (min, argmin) = best.expect("I(n, r+2) is nonempty");
    Ok(BetaStarEnumeration { min, argmin })
}

/// One representative per isomorphism class of graphs on `n ≤ 7` vertices,
/// built by vertex augmentation with a canonical-form filter (minimum edge
/// bitmask over all vertex permutations). Deterministic order.
pub fn nonisomorphic_graphs(n: usize) -> Result<Vec<Graph>, CombinatoricsError> {
    if n == 0 || n > NONISOMORPHIC_MAX_VERTICES {
        return Err(CombinatoricsError::NonisomorphicUnsupported { n });
    }
    let mut level: Vec<u32> = vec![0]; // edge bitmasks on m vertices
    for m in 2..=n {
        let tables = slot_permutation_tables(m);
        let mut seen = HashSet::new();
        let mut next = Vec::new();
        for &base in &level {
            // Pair slots for the first m−1 vertices keep their indices when a
            // vertex is appended, so `base` is already the lifted mask.
            for nbrs in 0u32..(1 << (m - 1)) {
                let mut mask = base;
                for i in 0..m - 1 {
                    if nbrs & (1 << i) != 0 {
                        mask |= 1 << pair_slot(i, m - 1);
                    }
                }
                let canon = canonical_edge_mask(mask, &tables);
                if seen.insert(canon) {
                    next.push(canon);
                }
            }
        }
        level = next;
    }
    Ok(level
        .into_iter()
        .map(|mask| graph_from_slot_mask(mask, n))
        .collect())
}

/// Slot index of the pair {i, j} with i < j: pairs sorted by larger endpoint.
fn pair_slot(i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    j * (j - 1) / 2 + i
}

fn graph_from_slot_mask(mask: u32, n: usize) -> Graph {
    let mut edges = Vec::new();
    for j in 0..n {
        for i in 0..j {
            if mask & (1 << pair_slot(i, j)) != 0 {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges).expect("slot mask encodes a simple graph")
}

/// For each permutation of [m], the induced permutation of pair slots.
fn slot_permutation_tables(m: usize) -> Vec<Vec<usize>> {
    let mut perms = Vec::new();
    let mut cur: Vec<usize> = (0..m).collect();
    permute_rec(&mut cur, 0, &mut perms);
    perms
        .into_iter()
        .map(|p| {
            let mut table = vec![0usize; m * (m - 1) / 2];
            for j in 0..m {
                for i in 0..j {
                    let (a, b) = (p[i].min(p[j]), p[i].max(p[j]));
                    table[pair_slot(i, j)] = pair_slot(a, b);
                }
            }
            table
        })
        .collect()
}

fn permute_rec(cur: &mut Vec<usize>, pos: usize, out: &mut Vec<Vec<usize>>) {
    if pos == cur.len() {
        out.push(cur.clone());
        return;
    }
    for i in pos..cur.len() {
        cur.swap(pos, i);
        permute_rec(cur, pos + 1, out);
        cur.swap(pos, i);
    }
}

fn canonical_edge_mask(mask: u32, tables: &[Vec<usize>]) -> u32 {
    let mut best = u32::MAX;
    for table in tables {
        let mut mapped = 0u32;
        let mut bits = mask;
        while bits != 0 {
            let s = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            mapped |= 1 << table[s];
        }
        best = best.min(mapped);
    }
    best
}
