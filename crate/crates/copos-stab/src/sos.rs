//! Compilers that turn each SOS-based stability bound into a block-structured
//! conic program, plus the orchestration layer (compile → solve → round).
//!
//! Four program families are compiled here, all built from the matrix
//! M = I + (1+ε)A_G:
//!
//! * `compile_theta`: min t with t·M − J certified copositive through the
//!   structured decomposition (Σy)^r · yᵀ(tM−J)y = Σ_I σ_I(y)·Π_{i∈I} y_i
//!   over subsets I with |I| ≡ r+2 (mod 2), each σ_I a homogeneous SOS of
//!   degree r+2−|I|. At r=0 this is exactly the "PSD + entrywise-nonnegative"
//!   matrix split.
//! * `compile_lasserre_simplex`: max λ with xᵀMx − λ in the degree-2r
//!   truncated quadratic module of the simplex plus the ideal of Σx_i − 1.
//!   Order 1 uses the equivalent reduced matrix form
//!   M − λJ − (aeᵀ+eaᵀ)/2 ⪰ 0, a ≥ 0.
//! * `compile_preordering`: same but over the preordering (one Gram block per
//!   square-free product Π_{i∈J} x_i with |J| ≤ 2r).
//! * `compile_sphere`: max λ with Σ_ij M_ij x_i²x_j² − λ in Σ_r plus the
//!   ideal of Σx_i² − 1. The target is invariant under all sign flips
//!   x_i → −x_i, so the Gram matrix is block-diagonalized by exponent parity
//!   class and the ideal multiplier keeps only even monomials.
//!
//! Compilation is pure and deterministic; every function here names the
//! monomial order of `crate::monomials` as the single indexing authority.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::combinatorics;
use crate::conic::{ConicProgram, Sense, VarRef};
use crate::graph::Graph;
use crate::matrix::SymMatrix;
use crate::monomials::{self, MonomialBasis};
use crate::solver::{self, Residuals, SolverConfig, SolverError, Status};

/// Slack added before rounding a bound to an integer bound on α. Documented
/// as unsound in principle (a value within this slack above an integer rounds
/// down) but exact on everything we feed it.
pub const RHO_ROUND: f64 = 1e-5;
/// Tolerance for declaring that a ϑ-type value has reached α.
pub const RHO_RANK: f64 = 1e-5;
/// Cap on the number of square-free products materialized by
/// `compile_preordering`.
pub const PREORDERING_PRODUCT_CAP: u128 = 10_000;
/// Tolerance used by the cross-hierarchy chain comparison.
pub const CHAIN_TOL: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum SosError {
    #[error("preordering truncation needs {products} products, cap is {cap}")]
    CapExceeded { products: u128, cap: u128 },
    #[error("solver stopped after {iterations} iterations without a certificate")]
    DidNotConverge { iterations: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Which bound a [`BoundResult`] value belongs to. `Theta`, `Zeta` and `Shor`
/// upper-bound α directly; the other three lower-bound 1/α.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Hierarchy {
    Theta,
    Zeta,
    LasserreSimplex,
    Preordering,
    Sphere,
    Shor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundValue {
    Finite { value: f64 },
    Infeasible,
    Unbounded,
}

impl BoundValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            BoundValue::Finite { value } => Some(*value),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundResult {
    pub hierarchy: Hierarchy,
    pub r: usize,
    pub eps: f64,
    pub value: BoundValue,
    pub solver_residuals: Option<Residuals>,
    /// Integer bound on α implied by `value` (rounded with `RHO_ROUND`):
    /// floor for the direct hierarchies, via 1/value for the reciprocal ones.
    pub derived_alpha_bound: Option<i64>,
}

/// M = I + (1+ε)A_G, the quadratic form whose simplex minimum is 1/α(G).
pub fn objective_matrix(g: &Graph, eps: f64) -> SymMatrix {
    assert!(eps >= 0.0 && eps.is_finite(), "perturbation must be finite and >= 0");
    SymMatrix::from_fn(g.n(), |i, j| {
        if i == j {
            1.0
        } else if g.has_edge(i, j) {
            1.0 + eps
        } else {
            0.0
        }
    })
}

/// Visits all k-element subsets of 0..n in lexicographic order.
fn for_each_combination(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    if k == 0 {
        f(&[]);
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + (i - 1) {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn subset_label(prefix: &str, s: &[usize]) -> String {
    let mut out = String::from(prefix);
    out.push('[');
    for (k, v) in s.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push_str(&v.to_string());
    }
    out.push(']');
    out
}

/// A σ multiplier: either a single nonnegative coefficient (degree-0 SOS) or
/// a Gram block over a monomial basis.
enum GramVar {
    Scalar(VarRef),
    Block { id: usize },
}

/// Pushes the coefficient of `target` in Σ_{a+b=target} G_{ab} for a Gram
/// matrix over `basis`, restricted to monomials of degree ≤ `max_deg` (pass
/// the basis degree for exact-degree bases). Pair (a,b) with a ≠ b is pushed
/// once with coefficient 1.0, which the conic layer reads as G_ab + G_ba.
fn push_gram_terms(
    p: &ConicProgram,
    block: usize,
    basis: &MonomialBasis,
    target: &[u8],
    max_deg: usize,
    terms: &mut Vec<(VarRef, f64)>,
) {
    let tdeg = monomials::mono_degree(target);
    for a_idx in 0..basis.len() {
        let a = basis.mono(a_idx);
        let adeg = monomials::mono_degree(a);
        if adeg > tdeg || tdeg - adeg > max_deg {
            continue;
        }
        let Some(b) = monomials::mono_div(target, a) else { continue };
        let Some(b_idx) = basis.index_of(&b) else { continue };
        if a_idx <= b_idx {
            terms.push((p.psd_entry(block, a_idx, b_idx), 1.0));
        }
    }
}

/// The copositivity-hierarchy program: min t such that
/// (Σ_i y_i)^r · yᵀ(t(I+(1+ε)A_G) − J)y has the structured decomposition
/// Σ_I σ_I(y)·Π_{i∈I} y_i with σ_I homogeneous SOS of degree r+2−|I|.
/// Its optimal value is ϑ^(r)_ε(G).
pub fn compile_theta(g: &Graph, r: usize, eps: f64) -> ConicProgram {
    assert!(eps >= 0.0 && eps.is_finite(), "perturbation must be finite and >= 0");
    let n = g.n();
    let d = r + 2;
    let mut p = ConicProgram::new(Sense::Min);
    let t = p.add_free();

    // One basis per σ degree; σ_I is homogeneous of degree d − |I|, so its
    // Gram ranges over monomials of exact degree (d − |I|)/2.
    let mut bases: BTreeMap<usize, MonomialBasis> = BTreeMap::new();
    let mut sigma: BTreeMap<Vec<usize>, GramVar> = BTreeMap::new();
    let mut k = d % 2;
    while k <= d.min(n) {
        if k == d {
            for_each_combination(n, k, &mut |s| {
                sigma.insert(s.to_vec(), GramVar::Scalar(p.add_nonneg()));
            });
        } else {
            let half = (d - k) / 2;
            bases
                .entry(half)
                .or_insert_with(|| MonomialBasis::exact(n, half));
            let size = bases[&half].len();
            for_each_combination(n, k, &mut |s| {
                let id = p.add_psd_block(subset_label("sigma", s), size);
                sigma.insert(s.to_vec(), GramVar::Block { id });
            });
        }
        k += 2;
    }

    // One equality per exponent vector γ of total degree d: the coefficient
    // of y^γ on both sides of the decomposition. With w = d!/γ!, the target
    // side contributes w/(d(d−1)) · (t·(f(γ) − d) − d(d−1)) where
    // f(γ) = Σγ_i² + (1+ε)·γᵀA_Gγ.
    let gamma_basis = MonomialBasis::exact(n, d);
    for gi in 0..gamma_basis.len() {
        let gamma = gamma_basis.mono(gi);
        let supp: Vec<usize> = (0..n).filter(|&i| gamma[i] > 0).collect();
        let mut terms: Vec<(VarRef, f64)> = Vec::new();
        for mask in 0u32..(1u32 << supp.len()) {
            let size = mask.count_ones() as usize;
            if size % 2 != d % 2 {
                continue;
            }
            let subset: Vec<usize> = supp
                .iter()
                .enumerate()
                .filter(|&(b, _)| mask >> b & 1 == 1)
                .map(|(_, &v)| v)
                .collect();
            match &sigma[&subset] {
                GramVar::Scalar(v) => terms.push((*v, 1.0)),
                GramVar::Block { id } => {
                    let mut delta = gamma.to_vec();
                    for &v in &subset {
                        delta[v] -= 1;
                    }
                    let half = (d - size) / 2;
                    push_gram_terms(&p, *id, &bases[&half], &delta, half, &mut terms);
                }
            }
        }
        let w = monomials::multinomial(gamma);
        let mut f_gamma = 0.0;
        for i in 0..n {
            f_gamma += (gamma[i] as f64) * (gamma[i] as f64);
        }
        for &(u, v) in g.edges() {
            f_gamma += 2.0 * (1.0 + eps) * (gamma[u] as f64) * (gamma[v] as f64);
        }
        let dd = (d * (d - 1)) as f64;
        terms.push((t, -w * (f_gamma - d as f64) / dd));
        p.add_constraint(terms, -w);
    }
    p.objective_push(t, 1.0);
    p
}

/// Lasserre bound for min xᵀMx over the simplex: max λ with
/// xᵀMx − λ = σ₀ + Σ_i σ_i x_i + u·(Σ_i x_i − 1), truncated at degree 2r.
/// Order 1 compiles to the equivalent matrix form
/// M − λJ − (aeᵀ+eaᵀ)/2 ⪰ 0 with a ≥ 0.
pub fn compile_lasserre_simplex(m: &SymMatrix, r: usize) -> ConicProgram {
    assert!(r >= 1, "simplex hierarchy starts at order 1");
    if r == 1 {
        return lasserre_simplex_reduced(m);
    }
    let n = m.n();
    let mut p = ConicProgram::new(Sense::Max);
    let lambda = p.add_free();
    let basis0 = MonomialBasis::up_to(n, r);
    let basis1 = MonomialBasis::up_to(n, r - 1);
    let g0 = p.add_psd_block("sigma0", basis0.len());
    let gi: Vec<usize> = (0..n)
        .map(|i| p.add_psd_block(format!("sigma_x{i}"), basis1.len()))
        .collect();
    let u_basis = MonomialBasis::up_to(n, 2 * r - 1);
    let u: Vec<VarRef> = (0..u_basis.len()).map(|_| p.add_free()).collect();

    let con_basis = MonomialBasis::up_to(n, 2 * r);
    for bi in 0..con_basis.len() {
        let beta = con_basis.mono(bi);
        let deg = monomials::mono_degree(beta);
        let mut terms: Vec<(VarRef, f64)> = Vec::new();
        push_gram_terms(&p, g0, &basis0, beta, r, &mut terms);
        for i in 0..n {
            if beta[i] == 0 {
                continue;
            }
            let mut delta = beta.to_vec();
            delta[i] -= 1;
            push_gram_terms(&p, gi[i], &basis1, &delta, r - 1, &mut terms);
        }
        // u·(Σx_i − 1): shifts up by one variable, minus the monomial itself.
        for i in 0..n {
            if beta[i] == 0 {
                continue;
            }
            let mut delta = beta.to_vec();
            delta[i] -= 1;
            if let Some(idx) = u_basis.index_of(&delta) {
                terms.push((u[idx], 1.0));
            }
        }
        if deg <= 2 * r - 1 {
            terms.push((u[u_basis.index_of(beta).unwrap()], -1.0));
        }
        if deg == 0 {
            terms.push((lambda, 1.0));
        }
        p.add_constraint(terms, quadratic_coefficient(m, beta));
    }
    p.objective_push(lambda, 1.0);
    p
}

/// Coefficient of the monomial `beta` in xᵀMx.
fn quadratic_coefficient(m: &SymMatrix, beta: &[u8]) -> f64 {
    if monomials::mono_degree(beta) != 2 {
        return 0.0;
    }
    let supp: Vec<usize> = (0..beta.len()).filter(|&i| beta[i] > 0).collect();
    match supp.len() {
        1 => m.get(supp[0], supp[0]),
        2 => 2.0 * m.get(supp[0], supp[1]),
        _ => unreachable!(),
    }
}

fn lasserre_simplex_reduced(m: &SymMatrix) -> ConicProgram {
    let n = m.n();
    let mut p = ConicProgram::new(Sense::Max);
    let lambda = p.add_free();
    let a: Vec<VarRef> = (0..n).map(|_| p.add_nonneg()).collect();
    let q = p.add_psd_block("Q", n);
    for i in 0..n {
        for j in i..n {
            let mut terms = vec![(lambda, 1.0)];
            if i == j {
                terms.push((a[i], 1.0));
                terms.push((p.psd_entry(q, i, i), 1.0));
            } else {
                terms.push((a[i], 0.5));
                terms.push((a[j], 0.5));
                // the pair entry reads as Q_ij + Q_ji
                terms.push((p.psd_entry(q, i, j), 0.5));
            }
            p.add_constraint(terms, m.get(i, j));
        }
    }
    p.objective_push(lambda, 1.0);
    p
}

/// Preordering bound: like the simplex hierarchy but with one multiplier per
/// square-free product Π_{i∈J} x_i, |J| ≤ 2r. Refuses when the number of
/// products exceeds [`PREORDERING_PRODUCT_CAP`].
pub fn compile_preordering(m: &SymMatrix, r: usize) -> Result<ConicProgram, SosError> {
    assert!(r >= 1, "preordering hierarchy starts at order 1");
    let n = m.n();
    let max_j = n.min(2 * r);
    let mut products: u128 = 0;
    for k in 0..=max_j {
        products += monomials::binomial(n as u64, k as u64);
    }
    if products > PREORDERING_PRODUCT_CAP {
        return Err(SosError::CapExceeded { products, cap: PREORDERING_PRODUCT_CAP });
    }

    let mut p = ConicProgram::new(Sense::Max);
    let lambda = p.add_free();
    let mut bases: BTreeMap<usize, MonomialBasis> = BTreeMap::new();
    let mut blocks: BTreeMap<Vec<usize>, GramVar> = BTreeMap::new();
    for k in 0..=max_j {
        let half = (2 * r - k) / 2;
        if half == 0 {
            for_each_combination(n, k, &mut |s| {
                blocks.insert(s.to_vec(), GramVar::Scalar(p.add_nonneg()));
            });
        } else {
            bases
                .entry(half)
                .or_insert_with(|| MonomialBasis::up_to(n, half));
            let size = bases[&half].len();
            for_each_combination(n, k, &mut |s| {
                let id = p.add_psd_block(subset_label("prod", s), size);
                blocks.insert(s.to_vec(), GramVar::Block { id });
            });
        }
    }
    let u_basis = MonomialBasis::up_to(n, 2 * r - 1);
    let u: Vec<VarRef> = (0..u_basis.len()).map(|_| p.add_free()).collect();

    let con_basis = MonomialBasis::up_to(n, 2 * r);
    for bi in 0..con_basis.len() {
        let beta = con_basis.mono(bi);
        let deg = monomials::mono_degree(beta);
        let supp: Vec<usize> = (0..n).filter(|&i| beta[i] > 0).collect();
        let mut terms: Vec<(VarRef, f64)> = Vec::new();
        for mask in 0u32..(1u32 << supp.len()) {
            let size = mask.count_ones() as usize;
            if size > max_j {
                continue;
            }
            let subset: Vec<usize> = supp
                .iter()
                .enumerate()
                .filter(|&(b, _)| mask >> b & 1 == 1)
                .map(|(_, &v)| v)
                .collect();
            let mut delta = beta.to_vec();
            for &v in &subset {
                delta[v] -= 1;
            }
            match &blocks[&subset] {
                GramVar::Scalar(v) => {
                    if monomials::mono_degree(&delta) == 0 {
                        terms.push((*v, 1.0));
                    }
                }
                GramVar::Block { id } => {
                    let half = (2 * r - size) / 2;
                    push_gram_terms(&p, *id, &bases[&half], &delta, half, &mut terms);
                }
            }
        }
        for i in 0..n {
            if beta[i] == 0 {
                continue;
            }
            let mut delta = beta.to_vec();
            delta[i] -= 1;
            if let Some(idx) = u_basis.index_of(&delta) {
                terms.push((u[idx], 1.0));
            }
        }
        if deg <= 2 * r - 1 {
            terms.push((u[u_basis.index_of(beta).unwrap()], -1.0));
        }
        if deg == 0 {
            terms.push((lambda, 1.0));
        }
        p.add_constraint(terms, quadratic_coefficient(m, beta));
    }
    p.objective_push(lambda, 1.0);
    Ok(p)
}

/// Sphere-formulation bound: max λ with Σ_ij M_ij x_i²x_j² − λ in Σ_r plus
/// the ideal generated by Σx_i² − 1, truncated at degree 2r. The target is
/// invariant under every sign flip x_i → −x_i, so the Gram matrix splits
/// into one block per exponent-parity class and the multiplier u keeps only
/// even monomials; the matched identity then lives on even monomials, which
/// are indexed by their half exponent h (monomial x^{2h}).
pub fn compile_sphere(m: &SymMatrix, r: usize) -> ConicProgram {
    assert!(r >= 2, "sphere hierarchy starts at order 2");
    let n = m.n();
    let mut p = ConicProgram::new(Sense::Max);
    let lambda = p.add_free();

    let basis = MonomialBasis::up_to(n, r);
    // Parity classes over the Gram basis, in first-seen (basis) order.
    let mut class_of_parity: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for idx in 0..basis.len() {
        let parity: Vec<u8> = basis.mono(idx).iter().map(|e| e & 1).collect();
        let next = members.len();
        let c = *class_of_parity.entry(parity).or_insert(next);
        if c == members.len() {
            members.push(Vec::new());
        }
        members[c].push(idx);
    }
    let mut vars: Vec<GramVar> = Vec::with_capacity(members.len());
    // global monomial index → (class, position inside the class block)
    let mut local = vec![(0usize, 0usize); basis.len()];
    for (c, mem) in members.iter().enumerate() {
        if mem.len() == 1 {
            vars.push(GramVar::Scalar(p.add_nonneg()));
        } else {
            let parity: Vec<u8> = basis.mono(mem[0]).iter().map(|e| e & 1).collect();
            let label = subset_label(
                "parity",
                &(0..n).filter(|&i| parity[i] == 1).collect::<Vec<_>>(),
            );
            vars.push(GramVar::Block { id: p.add_psd_block(label, mem.len()) });
        }
        for (pos, &g) in mem.iter().enumerate() {
            local[g] = (c, pos);
        }
    }

    // u over even monomials of degree ≤ 2r−2, indexed by half exponent.
    let u_basis = MonomialBasis::up_to(n, r - 1);
    let u: Vec<VarRef> = (0..u_basis.len()).map(|_| p.add_free()).collect();

    // One constraint per even monomial x^{2h} with |h| ≤ r.
    let con_basis = MonomialBasis::up_to(n, r);
    for hi in 0..con_basis.len() {
        let h = con_basis.mono(hi);
        let beta: Vec<u8> = h.iter().map(|e| 2 * e).collect();
        let bdeg = monomials::mono_degree(&beta);
        let mut terms: Vec<(VarRef, f64)> = Vec::new();
        // Gram pairs a + b = β; parity forces a and b into the same class.
        for a_idx in 0..basis.len() {
            let a = basis.mono(a_idx);
            let adeg = monomials::mono_degree(a);
            if adeg > bdeg || bdeg - adeg > r {
                continue;
            }
            let Some(b) = monomials::mono_div(&beta, a) else { continue };
            let Some(b_idx) = basis.index_of(&b) else { continue };
            if a_idx > b_idx {
                continue;
            }
            let (ca, la) = local[a_idx];
            let (cb, lb) = local[b_idx];
            debug_assert_eq!(ca, cb, "even target must pair equal parities");
            match &vars[ca] {
                GramVar::Scalar(v) => terms.push((*v, 1.0)),
                GramVar::Block { id } => terms.push((p.psd_entry(*id, la, lb), 1.0)),
            }
        }
        // u·(Σx_i² − 1) in half coordinates: Σ_i u_{h−e_i} − u_h.
        for i in 0..n {
            if h[i] == 0 {
                continue;
            }
            let mut hd = h.to_vec();
            hd[i] -= 1;
            if let Some(idx) = u_basis.index_of(&hd) {
                terms.push((u[idx], 1.0));
            }
        }
        if let Some(idx) = u_basis.index_of(h) {
            terms.push((u[idx], -1.0));
        }
        if bdeg == 0 {
            terms.push((lambda, 1.0));
        }
        // Coefficient of x^{2h} in Σ_ij M_ij x_i²x_j²: the quadratic
        // coefficient of x^h.
        p.add_constraint(terms, quadratic_coefficient(m, h));
    }
    p.objective_push(lambda, 1.0);
    p
}

/// Outcome of the exact order-1 feasibility precheck.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Precheck {
    MaybeFeasible,
    ProvablyInfeasible { i: usize, j: usize },
}

/// Necessary condition for the order-1 simplex program to be feasible:
/// M_ii + M_jj − 2M_ij ≥ 0 for all pairs. Returns the first violating pair.
pub fn p1_feasibility_precheck(m: &SymMatrix) -> Precheck {
    let n = m.n();
    for i in 0..n {
        for j in i + 1..n {
            if m.get(i, i) + m.get(j, j) - 2.0 * m.get(i, j) < 0.0 {
                return Precheck::ProvablyInfeasible { i, j };
            }
        }
    }
    Precheck::MaybeFeasible
}

/// The Lovász ϑ SDP: max ⟨J,X⟩ with Tr X = 1, X_ij = 0 on edges, X ⪰ 0.
pub fn lovasz_theta_program(g: &Graph) -> ConicProgram {
    let n = g.n();
    let mut p = ConicProgram::new(Sense::Max);
    let x = p.add_psd_block("X", n);
    for i in 0..n {
        for j in i..n {
            p.objective_push(p.psd_entry(x, i, j), 1.0);
        }
    }
    let trace: Vec<(VarRef, f64)> = (0..n).map(|i| (p.psd_entry(x, i, i), 1.0)).collect();
    p.add_constraint(trace, 1.0);
    for &(u, v) in g.edges() {
        p.add_constraint(vec![(p.psd_entry(x, u, v), 1.0)], 0.0);
    }
    p
}

/// The ϑ' strengthening: additionally X ≥ 0 entrywise, via nonnegative
/// slacks on the non-edge off-diagonal entries.
pub fn lovasz_theta_prime_program(g: &Graph) -> ConicProgram {
    let mut p = lovasz_theta_program(g);
    let n = g.n();
    for i in 0..n {
        for j in i + 1..n {
            if !g.has_edge(i, j) {
                let s = p.add_nonneg();
                p.add_constraint(vec![(p.psd_entry(0, i, j), 1.0), (s, -1.0)], 0.0);
            }
        }
    }
    p
}

fn derived_alpha(h: Hierarchy, value: f64) -> Option<i64> {
    match h {
        Hierarchy::Theta | Hierarchy::Zeta | Hierarchy::Shor => {
            Some((value + RHO_ROUND).floor() as i64)
        }
        Hierarchy::LasserreSimplex | Hierarchy::Preordering | Hierarchy::Sphere => {
            if value > 0.0 {
                Some((1.0 / value - RHO_ROUND).ceil() as i64)
            } else {
                None
            }
        }
    }
}

fn bound_from_solution(
    hierarchy: Hierarchy,
    r: usize,
    eps: f64,
    sol: &solver::Solution,
) -> Result<BoundResult, SosError> {
    match sol.status {
        Status::Optimal => Ok(BoundResult {
            hierarchy,
            r,
            eps,
            value: BoundValue::Finite { value: sol.primal_value },
            solver_residuals: Some(sol.residuals),
            derived_alpha_bound: derived_alpha(hierarchy, sol.primal_value),
        }),
        Status::PrimalInfeasible => Ok(BoundResult {
            hierarchy,
            r,
            eps,
            value: BoundValue::Infeasible,
            solver_residuals: None,
            derived_alpha_bound: None,
        }),
        Status::DualInfeasible => Ok(BoundResult {
            hierarchy,
            r,
            eps,
            value: BoundValue::Unbounded,
            solver_residuals: None,
            derived_alpha_bound: None,
        }),
        Status::MaxIterReached => Err(SosError::DidNotConverge { iterations: sol.iterations }),
    }
}

/// Compile-and-solve for ϑ^(r)_ε(G).
pub fn theta(g: &Graph, r: usize, eps: f64, cfg: &SolverConfig) -> Result<BoundResult, SosError> {
    let p = compile_theta(g, r, eps);
    let sol = solver::solve(&p, cfg)?;
    bound_from_solution(Hierarchy::Theta, r, eps, &sol)
}

/// Compile-and-solve for the order-r simplex bound on G (with ε-perturbed
/// objective matrix). At order 1 the exact pair precheck short-circuits the
/// solve when it already proves infeasibility.
pub fn simplex_bound(
    g: &Graph,
    r: usize,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<BoundResult, SosError> {
    let m = objective_matrix(g, eps);
    if r == 1 {
        if let Precheck::ProvablyInfeasible { .. } = p1_feasibility_precheck(&m) {
            return Ok(BoundResult {
                hierarchy: Hierarchy::LasserreSimplex,
                r,
                eps,
                value: BoundValue::Infeasible,
                solver_residuals: None,
                derived_alpha_bound: None,
            });
        }
    }
    let p = compile_lasserre_simplex(&m, r);
    let sol = solver::solve(&p, cfg)?;
    bound_from_solution(Hierarchy::LasserreSimplex, r, eps, &sol)
}

/// Compile-and-solve for the order-r preordering bound on G.
pub fn preordering_bound(
    g: &Graph,
    r: usize,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<BoundResult, SosError> {
    let m = objective_matrix(g, eps);
    let p = compile_preordering(&m, r)?;
    let sol = solver::solve(&p, cfg)?;
    bound_from_solution(Hierarchy::Preordering, r, eps, &sol)
}

/// Compile-and-solve for the order-r sphere bound on G.
pub fn sphere_bound(
    g: &Graph,
    r: usize,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<BoundResult, SosError> {
    let m = objective_matrix(g, eps);
    let p = compile_sphere(&m, r);
    let sol = solver::solve(&p, cfg)?;
    bound_from_solution(Hierarchy::Sphere, r, eps, &sol)
}

/// Solves the Lovász ϑ SDP (an upper bound on α, one step weaker than ϑ').
pub fn lovasz_theta(g: &Graph, cfg: &SolverConfig) -> Result<BoundResult, SosError> {
    let p = lovasz_theta_program(g);
    let sol = solver::solve(&p, cfg)?;
    bound_from_solution(Hierarchy::Shor, 0, 0.0, &sol)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RankOutcome {
    Found { rank: usize },
    NotFoundUpTo { r_max: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct ThetaRank {
    pub alpha: usize,
    pub outcome: RankOutcome,
    /// ϑ^(0), ϑ^(1), ... up to and including the first value that reaches α.
    pub values: Vec<f64>,
}

/// Smallest r ≤ r_max with ϑ^(r)(G) ≤ α(G) + `RHO_RANK`.
pub fn theta_rank(g: &Graph, r_max: usize, cfg: &SolverConfig) -> Result<ThetaRank, SosError> {
    let alpha = combinatorics::stability_number(g);
    let mut values = Vec::new();
    for r in 0..=r_max {
        let b = theta(g, r, 0.0, cfg)?;
        let v = b
            .value
            .finite()
            .expect("the copositivity program is always feasible and bounded");
        values.push(v);
        if v <= alpha as f64 + RHO_RANK {
            return Ok(ThetaRank { alpha, outcome: RankOutcome::Found { rank: r }, values });
        }
    }
    Ok(ThetaRank { alpha, outcome: RankOutcome::NotFoundUpTo { r_max }, values })
}

/// One member of the cross-hierarchy chain; failures are carried as strings
/// so a partial report stays serializable.
pub type ChainEntry = Result<BoundResult, String>;

/// Joint report for 1/ϑ^(2r) = sphere order 2r+2 = preordering order r+1
/// ≥ simplex order r+1, all bounded above by 1/α.
#[derive(Debug, Clone)]
pub struct ChainReport {
    pub r: usize,
    pub alpha: usize,
    pub theta: ChainEntry,
    pub sphere: ChainEntry,
    pub preordering: ChainEntry,
    pub simplex: ChainEntry,
    /// Largest pairwise deviation among the three members that must agree.
    pub max_equality_deviation: Option<f64>,
    /// Equality within [`CHAIN_TOL`], the ≥ inequality, and 1/α domination —
    /// None when any required solve failed.
    pub chain_holds: Option<bool>,
}

pub fn hierarchy_chain_report(g: &Graph, r: usize, cfg: &SolverConfig) -> ChainReport {
    let alpha = combinatorics::stability_number(g);
    let theta_e: ChainEntry = theta(g, 2 * r, 0.0, cfg).map_err(|e| e.to_string());
    let sphere_e: ChainEntry = sphere_bound(g, 2 * r + 2, 0.0, cfg).map_err(|e| e.to_string());
    let preo_e: ChainEntry = preordering_bound(g, r + 1, 0.0, cfg).map_err(|e| e.to_string());
    let simplex_e: ChainEntry = simplex_bound(g, r + 1, 0.0, cfg).map_err(|e| e.to_string());

    let mut max_dev = None;
    let mut holds = None;
    if let (Ok(t), Ok(s), Ok(po)) = (&theta_e, &sphere_e, &preo_e) {
        if let (Some(tv), Some(sv), Some(pv)) =
            (t.value.finite(), s.value.finite(), po.value.finite())
        {
            let inv_theta = 1.0 / tv;
            let dev = (inv_theta - sv)
                .abs()
                .max((inv_theta - pv).abs())
                .max((sv - pv).abs());
            max_dev = Some(dev);
            let inv_alpha = 1.0 / alpha as f64;
            let mut ok = dev <= CHAIN_TOL
                && inv_theta <= inv_alpha + CHAIN_TOL
                && sv <= inv_alpha + CHAIN_TOL
                && pv <= inv_alpha + CHAIN_TOL;
            match &simplex_e {
                Ok(f) => match f.value {
                    BoundValue::Finite { value } => {
                        ok = ok && value <= pv + CHAIN_TOL && value <= inv_alpha + CHAIN_TOL;
                    }
                    BoundValue::Infeasible => {} // −∞ satisfies the inequality
                    BoundValue::Unbounded => ok = false,
                },
                Err(_) => {}
            }
            holds = Some(ok);
        }
    }
    ChainReport {
        r,
        alpha,
        theta: theta_e,
        sphere: sphere_e,
        preordering: preo_e,
        simplex: simplex_e,
        max_equality_deviation: max_dev,
        chain_holds: holds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn solve_cfg() -> SolverConfig {
        SolverConfig::default()
    }

    fn value_of(b: &BoundResult) -> f64 {
        b.value.finite().expect("expected a finite bound value")
    }

    // ---- exact polynomial reconstruction of compiled identities ----
    //
    // The compilers are pure coefficient bookkeeping, so they can be checked
    // exactly: assign small integers to every decision variable, evaluate
    // each compiled equality row, and compare with the coefficient of the
    // corresponding monomial in a brute-force expansion of the identity.
    // All numbers stay small ints, so f64 arithmetic is exact.

    type Poly = HashMap<Vec<u8>, f64>;

    fn poly_add_term(p: &mut Poly, mono: Vec<u8>, c: f64) {
        if c != 0.0 {
            *p.entry(mono).or_insert(0.0) += c;
        }
    }

    fn poly_mul(a: &Poly, b: &Poly) -> Poly {
        let mut out = Poly::new();
        for (ma, ca) in a {
            for (mb, cb) in b {
                poly_add_term(&mut out, monomials::mono_mul(ma, mb), ca * cb);
            }
        }
        out
    }

    fn lcg(seed: &mut u64) -> i64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 33) % 7) as i64 - 3
    }

    /// Deterministic small-integer assignment for every variable of `p`.
    fn assign_all(p: &ConicProgram, seed: u64) -> BTreeMap<VarRef, f64> {
        let mut s = seed;
        let mut out = BTreeMap::new();
        for i in 0..p.num_free {
            out.insert(VarRef::Free(i), lcg(&mut s) as f64);
        }
        for i in 0..p.num_nonneg {
            out.insert(VarRef::Nonneg(i), lcg(&mut s) as f64);
        }
        for (b, blk) in p.psd_blocks.iter().enumerate() {
            for i in 0..blk.size {
                for j in i..blk.size {
                    out.insert(VarRef::Psd { block: b, row: i, col: j }, lcg(&mut s) as f64);
                }
            }
        }
        out
    }

    /// Row residual Σ coeff·value − rhs under the pair convention that an
    /// off-diagonal coefficient c reads as c·(X_ij + X_ji) = 2c·X_ij.
    fn row_residual(p: &ConicProgram, row: usize, vals: &BTreeMap<VarRef, f64>) -> f64 {
        let con = &p.constraints[row];
        let mut acc = -con.rhs;
        for (v, c) in &con.terms {
            let scale = match v {
                VarRef::Psd { row, col, .. } if row != col => 2.0,
                _ => 1.0,
            };
            acc += scale * c * vals[v];
        }
        acc
    }

    /// Gram value σ(x) = Σ_{a,b} G_ab x^{a+b} for a block over `basis`.
    fn gram_poly(
        p: &ConicProgram,
        block: usize,
        basis: &[Vec<u8>],
        vals: &BTreeMap<VarRef, f64>,
    ) -> Poly {
        let mut out = Poly::new();
        let sz = p.psd_blocks[block].size;
        assert_eq!(sz, basis.len());
        for i in 0..sz {
            for j in i..sz {
                let v = vals[&VarRef::Psd { block, row: i, col: j }];
                let mono = monomials::mono_mul(&basis[i], &basis[j]);
                let c = if i == j { v } else { 2.0 * v };
                poly_add_term(&mut out, mono, c);
            }
        }
        out
    }

    fn basis_list(b: &MonomialBasis) -> Vec<Vec<u8>> {
        (0..b.len()).map(|i| b.mono(i).to_vec()).collect()
    }

    #[test]
    fn theta_compilation_reproduces_polynomial_identity_exactly() {
        let g = Graph::cycle(5);
        let n = 5;
        let r = 1usize;
        let d = r + 2;
        let p = compile_theta(&g, r, 0.0);
        let vals = assign_all(&p, 11);

        // Rebuild Σ_I σ_I Π_{i∈I} y_i − (Σy)^r·yᵀ(tM−J)y from the raw
        // assignment. Blocks were registered size-ascending, subsets in
        // lexicographic order; with d=3 that is σ_{i} (n blocks over the
        // degree-1 basis) and then scalars for each |I|=3.
        let deg1 = basis_list(&MonomialBasis::exact(n, 1));
        let mut diff = Poly::new();
        for i in 0..n {
            let sig = gram_poly(&p, i, &deg1, &vals);
            let mut xi = Poly::new();
            let mut e = vec![0u8; n];
            e[i] = 1;
            poly_add_term(&mut xi, e, 1.0);
            for (m, c) in poly_mul(&sig, &xi) {
                poly_add_term(&mut diff, m, c);
            }
        }
        let mut scalar_iter = 0..p.num_nonneg;
        for_each_combination(n, d, &mut |s| {
            let idx = scalar_iter.next().unwrap();
            let mut mono = vec![0u8; n];
            for &v in s {
                mono[v] = 1;
            }
            poly_add_term(&mut diff, mono, vals[&VarRef::Nonneg(idx)]);
        });
        assert!(scalar_iter.next().is_none());

        // subtract (Σy)^r · yᵀ(tM−J)y with M = I + A
        let t = vals[&VarRef::Free(0)];
        let m = objective_matrix(&g, 0.0);
        let mut quad = Poly::new();
        for i in 0..n {
            for j in 0..n {
                let mut mono = vec![0u8; n];
                mono[i] += 1;
                mono[j] += 1;
                poly_add_term(&mut quad, mono, t * m.get(i, j) - 1.0);
            }
        }
        let mut lin = Poly::new();
        for i in 0..n {
            let mut e = vec![0u8; n];
            e[i] = 1;
            poly_add_term(&mut lin, e, 1.0);
        }
        let mut lhs = quad;
        for _ in 0..r {
            lhs = poly_mul(&lhs, &lin);
        }
        for (m, c) in lhs {
            poly_add_term(&mut diff, m, -c);
        }

        // The compiled rows must equal the difference coefficient per γ, and
        // the difference must have no support outside the constraint set.
        let gamma_basis = MonomialBasis::exact(n, d);
        assert_eq!(p.constraints.len(), gamma_basis.len());
        for gi in 0..gamma_basis.len() {
            let gamma = gamma_basis.mono(gi);
            let want = diff.get(gamma).copied().unwrap_or(0.0);
            let got = row_residual(&p, gi, &vals);
            assert_eq!(got, want, "coefficient mismatch at {gamma:?}");
        }
        for (mono, c) in &diff {
            if *c != 0.0 {
                assert!(gamma_basis.index_of(mono).is_some(), "dangling monomial {mono:?}");
            }
        }
    }

    #[test]
    fn simplex_compilation_reproduces_polynomial_identity_exactly() {
        let n = 3;
        let r = 2usize;
        let g = Graph::path(3);
        let m = objective_matrix(&g, 0.0);
        let p = compile_lasserre_simplex(&m, r);
        let vals = assign_all(&p, 5);

        let basis0 = basis_list(&MonomialBasis::up_to(n, r));
        let basis1 = basis_list(&MonomialBasis::up_to(n, r - 1));
        let mut rhs_poly = gram_poly(&p, 0, &basis0, &vals);
        for i in 0..n {
            let sig = gram_poly(&p, 1 + i, &basis1, &vals);
            let mut xi = Poly::new();
            let mut e = vec![0u8; n];
            e[i] = 1;
            poly_add_term(&mut xi, e, 1.0);
            for (mo, c) in poly_mul(&sig, &xi) {
                poly_add_term(&mut rhs_poly, mo, c);
            }
        }
        // u·(Σx − 1) + λ − xᵀMx; free vars: 0 is λ, then u in basis order.
        let u_basis = MonomialBasis::up_to(n, 2 * r - 1);
        let mut u_poly = Poly::new();
        for i in 0..u_basis.len() {
            poly_add_term(&mut u_poly, u_basis.mono(i).to_vec(), vals[&VarRef::Free(1 + i)]);
        }
        let mut simplex_gen = Poly::new();
        for i in 0..n {
            let mut e = vec![0u8; n];
            e[i] = 1;
            poly_add_term(&mut simplex_gen, e, 1.0);
        }
        poly_add_term(&mut simplex_gen, vec![0; n], -1.0);
        for (mo, c) in poly_mul(&u_poly, &simplex_gen) {
            poly_add_term(&mut rhs_poly, mo, c);
        }
        poly_add_term(&mut rhs_poly, vec![0; n], vals[&VarRef::Free(0)]);
        for i in 0..n {
            for j in 0..n {
                let mut mono = vec![0u8; n];
                mono[i] += 1;
                mono[j] += 1;
                poly_add_term(&mut rhs_poly, mono, -m.get(i, j));
            }
        }

        let con_basis = MonomialBasis::up_to(n, 2 * r);
        assert_eq!(p.constraints.len(), con_basis.len());
        for bi in 0..con_basis.len() {
            let beta = con_basis.mono(bi);
            let want = rhs_poly.get(beta).copied().unwrap_or(0.0);
            assert_eq!(row_residual(&p, bi, &vals), want, "mismatch at {beta:?}");
        }
        for (mono, c) in &rhs_poly {
            if *c != 0.0 {
                assert!(con_basis.index_of(mono).is_some(), "dangling monomial {mono:?}");
            }
        }
    }

    #[test]
    fn sphere_compilation_reproduces_polynomial_identity_exactly() {
        let n = 3;
        let r = 2usize;
        let g = Graph::cycle(3);
        let m = objective_matrix(&g, 0.0);
        let p = compile_sphere(&m, r);
        let vals = assign_all(&p, 23);

        // Rebuild σ from the parity-class blocks in their registration order.
        let basis = MonomialBasis::up_to(n, r);
        let mut class_of_parity: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        for idx in 0..basis.len() {
            let parity: Vec<u8> = basis.mono(idx).iter().map(|e| e & 1).collect();
            let next = members.len();
            let c = *class_of_parity.entry(parity).or_insert(next);
            if c == members.len() {
                members.push(Vec::new());
            }
            members[c].push(idx);
        }
        let mut rhs_poly = Poly::new();
        let mut block_no = 0usize;
        let mut scalar_no = 0usize;
        for mem in &members {
            if mem.len() == 1 {
                let mono = monomials::mono_mul(basis.mono(mem[0]), basis.mono(mem[0]));
                poly_add_term(&mut rhs_poly, mono, vals[&VarRef::Nonneg(scalar_no)]);
                scalar_no += 1;
            } else {
                let blist: Vec<Vec<u8>> = mem.iter().map(|&i| basis.mono(i).to_vec()).collect();
                for (mo, c) in gram_poly(&p, block_no, &blist, &vals) {
                    poly_add_term(&mut rhs_poly, mo, c);
                }
                block_no += 1;
            }
        }
        let u_basis = MonomialBasis::up_to(n, r - 1);
        let mut u_poly = Poly::new();
        for i in 0..u_basis.len() {
            let doubled: Vec<u8> = u_basis.mono(i).iter().map(|e| 2 * e).collect();
            poly_add_term(&mut u_poly, doubled, vals[&VarRef::Free(1 + i)]);
        }
        let mut sphere_gen = Poly::new();
        for i in 0..n {
            let mut e = vec![0u8; n];
            e[i] = 2;
            poly_add_term(&mut sphere_gen, e, 1.0);
        }
        poly_add_term(&mut sphere_gen, vec![0; n], -1.0);
        for (mo, c) in poly_mul(&u_poly, &sphere_gen) {
            poly_add_term(&mut rhs_poly, mo, c);
        }
        poly_add_term(&mut rhs_poly, vec![0; n], vals[&VarRef::Free(0)]);
        for i in 0..n {
            for j in 0..n {
                let mut mono = vec![0u8; n];
                mono[i] += 2;
                mono[j] += 2;
                poly_add_term(&mut rhs_poly, mono, -m.get(i, j));
            }
        }

        let con_basis = MonomialBasis::up_to(n, r);
        assert_eq!(p.constraints.len(), con_basis.len());
        for hi in 0..con_basis.len() {
            let beta: Vec<u8> = con_basis.mono(hi).iter().map(|e| 2 * e).collect();
            let want = rhs_poly.get(&beta).copied().unwrap_or(0.0);
            assert_eq!(row_residual(&p, hi, &vals), want, "mismatch at {beta:?}");
        }
        // Everything the blocks can emit is even, so the even constraint
        // set covers the whole support.
        for (mono, c) in &rhs_poly {
            if *c != 0.0 {
                assert!(mono.iter().all(|e| e % 2 == 0), "odd monomial {mono:?} produced");
            }
        }
    }

    // ---- structural shapes ----

    #[test]
    fn theta_order_zero_is_the_psd_plus_nonnegative_split() {
        let g = Graph::path(4);
        let p = compile_theta(&g, 0, 0.0);
        assert_eq!(p.num_free, 1);
        assert_eq!(p.psd_blocks.len(), 1);
        assert_eq!(p.psd_blocks[0].size, 4);
        assert_eq!(p.num_nonneg, 6); // one scalar per pair {i,j}
        assert_eq!(p.constraints.len(), 10); // |I(4,2)|
        p.validate().unwrap();
    }

    #[test]
    fn simplex_order_one_is_the_reduced_matrix_form() {
        let m = objective_matrix(&Graph::cycle(5), 0.0);
        let p = compile_lasserre_simplex(&m, 1);
        assert_eq!(p.num_free, 1);
        assert_eq!(p.num_nonneg, 5);
        assert_eq!(p.psd_blocks.len(), 1);
        assert_eq!(p.psd_blocks[0].size, 5);
        assert_eq!(p.constraints.len(), 15);
        p.validate().unwrap();
    }

    #[test]
    fn preordering_refuses_oversized_truncation() {
        let m = SymMatrix::identity(40);
        match compile_preordering(&m, 3) {
            Err(SosError::CapExceeded { products, cap }) => {
                assert!(products > cap);
            }
            other => panic!("expected cap refusal, got {other:?}"),
        }
    }

    #[test]
    fn compiled_programs_export_to_sdpa() {
        let p = compile_theta(&Graph::cycle(5), 0, 0.0);
        let text = p.write_sdpa().unwrap();
        let back = crate::conic::read_sdpa(&text).unwrap();
        assert_eq!(back.num_constraints(), p.num_constraints());
    }

    // ---- solved values on worked examples ----

    #[test]
    fn theta_order_zero_on_c5_is_sqrt5() {
        let b = theta(&Graph::cycle(5), 0, 0.0, &solve_cfg()).unwrap();
        let v = value_of(&b);
        assert!((v - 5f64.sqrt()).abs() <= 1e-6, "got {v}");
        assert_eq!(b.derived_alpha_bound, Some(2));
    }

    #[test]
    fn theta_order_one_on_c5_reaches_alpha() {
        let b = theta(&Graph::cycle(5), 1, 0.0, &solve_cfg()).unwrap();
        let v = value_of(&b);
        assert!((v - 2.0).abs() <= 1e-5, "got {v}");
    }

    #[test]
    fn theta_order_zero_matches_theta_prime() {
        for g in [Graph::cycle(5), Graph::path(4), Graph::petersen()] {
            let via_hierarchy = value_of(&theta(&g, 0, 0.0, &solve_cfg()).unwrap());
            let sol = solver::solve(&lovasz_theta_prime_program(&g), &solve_cfg()).unwrap();
            assert_eq!(sol.status, Status::Optimal);
            assert!(
                (via_hierarchy - sol.primal_value).abs() <= 1e-5,
                "n={}: {} vs {}",
                g.n(),
                via_hierarchy,
                sol.primal_value
            );
        }
    }

    #[test]
    fn theta_perturbation_leaves_order_zero_unchanged() {
        let base = value_of(&theta(&Graph::cycle(5), 0, 0.0, &solve_cfg()).unwrap());
        for eps in [0.1, 1.0] {
            let v = value_of(&theta(&Graph::cycle(5), 0, eps, &solve_cfg()).unwrap());
            assert!((v - base).abs() <= 1e-5, "eps={eps}: {v} vs {base}");
        }
    }

    #[test]
    fn lovasz_theta_of_c5_is_sqrt5() {
        let b = lovasz_theta(&Graph::cycle(5), &solve_cfg()).unwrap();
        assert!((value_of(&b) - 5f64.sqrt()).abs() <= 1e-6);
        assert_eq!(b.hierarchy, Hierarchy::Shor);
    }

    #[test]
    fn simplex_is_exact_on_disjoint_cliques() {
        let g = Graph::complete(3).disjoint_union(&Graph::complete(3)).unwrap();
        let b = simplex_bound(&g, 1, 0.0, &solve_cfg()).unwrap();
        let v = value_of(&b);
        assert!((v - 0.5).abs() <= 1e-6, "got {v}");
        assert_eq!(b.derived_alpha_bound, Some(2));
    }

    #[test]
    fn simplex_order_one_infeasible_on_c5() {
        let b = simplex_bound(&Graph::cycle(5), 1, 0.0, &solve_cfg()).unwrap();
        assert_eq!(b.value, BoundValue::Infeasible);
        assert!(b.solver_residuals.is_none());
    }

    #[test]
    fn perturbed_simplex_refused_by_exact_precheck() {
        let m = objective_matrix(&Graph::path(4), 0.5);
        match p1_feasibility_precheck(&m) {
            Precheck::ProvablyInfeasible { i, j } => {
                assert!(Graph::path(4).has_edge(i, j));
            }
            Precheck::MaybeFeasible => panic!("perturbed edge must be caught"),
        }
        let b = simplex_bound(&Graph::path(4), 1, 0.5, &solve_cfg()).unwrap();
        assert_eq!(b.value, BoundValue::Infeasible);
        assert_eq!(
            p1_feasibility_precheck(&objective_matrix(&Graph::path(4), 0.0)),
            Precheck::MaybeFeasible
        );
        assert_eq!(p1_feasibility_precheck(&SymMatrix::identity(3)), Precheck::MaybeFeasible);
    }

    #[test]
    fn preordering_on_c5_equals_inverse_sqrt5() {
        let b = preordering_bound(&Graph::cycle(5), 1, 0.0, &solve_cfg()).unwrap();
        let v = value_of(&b);
        assert!((v - 1.0 / 5f64.sqrt()).abs() <= 1e-6, "got {v}");
        assert_eq!(b.derived_alpha_bound, Some(3)); // ceil(√5 − ρ)
    }

    #[test]
    fn preordering_on_empty_graph_is_one_over_n() {
        let b = preordering_bound(&Graph::empty(3), 1, 0.0, &solve_cfg()).unwrap();
        let v = value_of(&b);
        assert!((v - 1.0 / 3.0).abs() <= 1e-6, "got {v}");
        assert_eq!(b.derived_alpha_bound, Some(3));
    }

    #[test]
    fn sphere_order_two_on_c5_equals_inverse_sqrt5() {
        let b = sphere_bound(&Graph::cycle(5), 2, 0.0, &solve_cfg()).unwrap();
        let v = value_of(&b);
        assert!((v - 1.0 / 5f64.sqrt()).abs() <= 1e-6, "got {v}");
    }

    #[test]
    fn sphere_order_two_on_empty_graph() {
        let m = SymMatrix::identity(3);
        let p = compile_sphere(&m, 2);
        let sol = solver::solve(&p, &solve_cfg()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.primal_value - 1.0 / 3.0).abs() <= 1e-6);
    }

    #[test]
    fn sphere_at_doubled_order_matches_preordering() {
        // order-4 sphere vs order-2 preordering on C5; both should land on
        // 1/ϑ^(2)(C5) = 1/2.
        let s = value_of(&sphere_bound(&Graph::cycle(5), 4, 0.0, &solve_cfg()).unwrap());
        let po = value_of(&preordering_bound(&Graph::cycle(5), 2, 0.0, &solve_cfg()).unwrap());
        assert!((s - po).abs() <= 1e-5, "sphere {s} vs preordering {po}");
        assert!((s - 0.5).abs() <= 1e-4, "got {s}");
    }

    #[test]
    fn copositivity_value_matches_shifted_sphere_value() {
        // 1/ϑ^(r) = sphere value at order r+2, for r = 0 and 1.
        for (graph, r) in [(Graph::cycle(5), 0), (Graph::cycle(5), 1), (Graph::cycle(6), 0)] {
            let t = value_of(&theta(&graph, r, 0.0, &solve_cfg()).unwrap());
            let s = value_of(&sphere_bound(&graph, r + 2, 0.0, &solve_cfg()).unwrap());
            assert!(
                (1.0 / t - s).abs() <= 1e-5,
                "r={r}: 1/theta={} vs sphere={s}",
                1.0 / t
            );
        }
    }

    #[test]
    fn theta_rank_of_petersen_is_zero() {
        let tr = theta_rank(&Graph::petersen(), 3, &solve_cfg()).unwrap();
        assert_eq!(tr.outcome, RankOutcome::Found { rank: 0 });
        assert_eq!(tr.values.len(), 1);
        assert!((tr.values[0] - 4.0).abs() <= 1e-5);
    }

    #[test]
    fn theta_rank_of_c5_is_one() {
        let tr = theta_rank(&Graph::cycle(5), 3, &solve_cfg()).unwrap();
        assert_eq!(tr.outcome, RankOutcome::Found { rank: 1 });
        assert_eq!(tr.values.len(), 2);
        assert!((tr.values[0] - 5f64.sqrt()).abs() <= 1e-5);
        assert!((tr.values[1] - 2.0).abs() <= 1e-5);
    }

    #[test]
    fn chain_report_on_c5() {
        let rep = hierarchy_chain_report(&Graph::cycle(5), 0, &solve_cfg());
        assert_eq!(rep.chain_holds, Some(true));
        assert!(rep.max_equality_deviation.unwrap() <= CHAIN_TOL);
        let inv = 1.0 / value_of(rep.theta.as_ref().unwrap());
        assert!((inv - 1.0 / 5f64.sqrt()).abs() <= 1e-5);
        assert_eq!(rep.simplex.as_ref().unwrap().value, BoundValue::Infeasible);
    }

    #[test]
    fn chain_report_on_disjoint_triangles() {
        let g = Graph::complete(3).disjoint_union(&Graph::complete(3)).unwrap();
        let rep = hierarchy_chain_report(&g, 0, &solve_cfg());
        assert_eq!(rep.chain_holds, Some(true));
        let f = value_of(rep.simplex.as_ref().unwrap());
        assert!((f - 0.5).abs() <= 1e-5, "simplex got {f}");
        let po = value_of(rep.preordering.as_ref().unwrap());
        assert!((po - 0.5).abs() <= 1e-5, "preordering got {po}");
    }

    #[test]
    fn derived_bounds_round_as_documented() {
        assert_eq!(derived_alpha(Hierarchy::Theta, 2.2360), Some(2));
        assert_eq!(derived_alpha(Hierarchy::Theta, 3.0 - 1e-7), Some(3));
        assert_eq!(derived_alpha(Hierarchy::Sphere, 0.5 - 1e-8), Some(2));
        assert_eq!(derived_alpha(Hierarchy::Sphere, -0.25), None);
        assert_eq!(derived_alpha(Hierarchy::Preordering, 1.0 / 3.0 + 1e-8), Some(3));
    }
}
