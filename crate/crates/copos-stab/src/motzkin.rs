//! Standard quadratic programs over the simplex: evaluation, KKT
//! certificates, and minimizer classification for the quadratic forms whose
//! simplex minimum encodes 1/α(G) — the plain, ε-perturbed, and
//! edge-reweighted variants.
//!
//! Classification is combinatorial wherever theory characterizes the point
//! (clique partitions of the support, maximality, private-neighbor cliques);
//! floating point only enters through support detection and the second-order
//! eigenvalue check. Points of the form χ^S/|S| admit an exact rational
//! evaluation path used heavily by the tests.

use num::rational::BigRational;
use num::{BigInt, Zero};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::combinatorics::{criticality_class, is_critical_edge, stability_number, CriticalityClass};
use crate::graph::{mask_to_vec, Graph, GraphError};
use crate::matrix::SymMatrix;
use crate::solver::linalg::sym_eigvals;

/// Support-membership tolerance for simplex points.
pub const TAU_DELTA: f64 = 1e-9;
/// Entries in [τ_Δ, 10³·τ_Δ] are refused by classification: too large to be
/// zero, too small to be trusted as support.
pub const DEAD_ZONE_UPPER: f64 = 1e3 * TAU_DELTA;
/// Tolerance for KKT equalities (stationarity, complementarity) and for the
/// strictness of multipliers.
const KKT_TOL: f64 = 1e-8;
/// Strict-positivity threshold for restricted-Hessian eigenvalues.
const EIG_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MotzkinError {
    #[error("dimension mismatch: point has {point} coordinates, matrix is {matrix}×{matrix}")]
    DimensionMismatch { point: usize, matrix: usize },
    #[error("not a simplex point: {0}")]
    InvalidPoint(String),
    #[error("mass shift precondition violated: {0}")]
    ShiftPrecondition(String),
}

/// Provenance of the objective matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum QpKind {
    MotzkinStraus,
    Perturbed { eps: f64 },
    EdgeWeighted { edge: (usize, usize) },
    Custom,
}

/// A quadratic form x ↦ xᵀMx to be minimized over the standard simplex.
#[derive(Debug, Clone)]
pub struct SimplexQP {
    pub m: SymMatrix,
    pub description: QpKind,
}

impl SimplexQP {
    /// M = I + A_G; the simplex minimum is exactly 1/α(G).
    pub fn motzkin_straus(g: &Graph) -> Self {
        let a = g.adjacency_matrix();
        let m = SymMatrix::from_fn(g.n(), |i, j| if i == j { 1.0 } else { a.get(i, j) });
        SimplexQP { m, description: QpKind::MotzkinStraus }
    }

    /// M = I + (1+ε)A_G with ε > 0; same minimum, but attained only at the
    /// uniform points on maximum stable sets.
    pub fn perturbed(g: &Graph, eps: f64) -> Self {
        assert!(eps > 0.0 && eps.is_finite(), "perturbation must be positive");
        let a = g.adjacency_matrix();
        let m = SymMatrix::from_fn(g.n(), |i, j| {
            if i == j {
                1.0
            } else {
                (1.0 + eps) * a.get(i, j)
            }
        });
        SimplexQP { m, description: QpKind::Perturbed { eps } }
    }

    /// M = I + A_G + A_{G∖e}: every edge weighted 2 except `e` weighted 1.
    /// The simplex minimum is 1/α(G) regardless of the chosen edge.
    pub fn edge_weighted(g: &Graph, u: usize, v: usize) -> Result<Self, GraphError> {
        let without = g.delete_edge(u, v)?; // validates that {u,v} is an edge
        let a = g.adjacency_matrix();
        let a2 = without.adjacency_matrix();
        let m = SymMatrix::from_fn(g.n(), |i, j| {
            if i == j {
                1.0
            } else {
                a.get(i, j) + a2.get(i, j)
            }
        });
        Ok(SimplexQP { m, description: QpKind::EdgeWeighted { edge: (u.min(v), u.max(v)) } })
    }

    pub fn custom(m: SymMatrix) -> Self {
        SimplexQP { m, description: QpKind::Custom }
    }

    pub fn n(&self) -> usize {
        self.m.n()
    }

    /// The raw quadratic form, defined for any vector (no simplex check);
    /// used by finite-difference probes and grid scans.
    pub fn form(&self, x: &[f64]) -> f64 {
        self.m.quadratic_form(x)
    }

    pub fn evaluate(&self, x: &SimplexPoint) -> Result<f64, MotzkinError> {
        if x.len() != self.n() {
            return Err(MotzkinError::DimensionMismatch { point: x.len(), matrix: self.n() });
        }
        Ok(self.form(x.coords()))
    }

    /// Exact evaluation at a rational point. The matrix entries are converted
    /// exactly from their binary representation, so for integer matrices
    /// (all graph-derived forms with dyadic ε) the result is exact.
    pub fn evaluate_rational(&self, x: &[BigRational]) -> BigRational {
        assert_eq!(x.len(), self.n(), "dimension mismatch");
        let entries = self.m.rational_entries();
        let n = self.n();
        let mut acc = BigRational::zero();
        for i in 0..n {
            for j in 0..n {
                acc += &entries[i * n + j] * &x[i] * &x[j];
            }
        }
        acc
    }
}

/// A point of the standard simplex (entries ≥ −τ_Δ, coordinates summing to 1
/// within τ_Δ). The support is the set of entries strictly above τ_Δ.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    x: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(x: Vec<f64>) -> Result<Self, MotzkinError> {
        if x.is_empty() {
            return Err(MotzkinError::InvalidPoint("empty coordinate vector".into()));
        }
        for (i, &v) in x.iter().enumerate() {
            if !v.is_finite() || v < -TAU_DELTA {
                return Err(MotzkinError::InvalidPoint(format!(
                    "coordinate {} is {v}, below -τ_Δ",
                    i + 1
                )));
            }
        }
        let sum: f64 = x.iter().sum();
        if (sum - 1.0).abs() > TAU_DELTA {
            return Err(MotzkinError::InvalidPoint(format!(
                "coordinates sum to {sum}, not 1"
            )));
        }
        Ok(SimplexPoint { x })
    }

    /// χ^S/|S|: uniform mass on a nonempty vertex set.
    pub fn uniform_on(support: &[usize], n: usize) -> Result<Self, MotzkinError> {
        if support.is_empty() {
            return Err(MotzkinError::InvalidPoint("empty support".into()));
        }
        let mut x = vec![0.0; n];
        let mass = 1.0 / support.len() as f64;
        for &i in support {
            if i >= n {
                return Err(MotzkinError::InvalidPoint(format!(
                    "vertex {} outside 1..{n}",
                    i + 1
                )));
            }
            if x[i] != 0.0 {
                return Err(MotzkinError::InvalidPoint(format!(
                    "vertex {} repeated in support",
                    i + 1
                )));
            }
            x[i] = mass;
        }
        SimplexPoint::new(x)
    }

    /// The standard basis vector e_i.
    pub fn vertex(i: usize, n: usize) -> Result<Self, MotzkinError> {
        Self::uniform_on(&[i], n)
    }

    pub fn coords(&self) -> &[f64] {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.x.len()).filter(|&i| self.x[i] > TAU_DELTA).collect()
    }

    pub fn support_mask(&self) -> u64 {
        let mut mask = 0u64;
        for i in 0..self.x.len() {
            if self.x[i] > TAU_DELTA {
                mask |= 1 << i;
            }
        }
        mask
    }

    /// Entries too large to round to zero but too small to trust as support.
    pub fn dead_zone_entries(&self) -> Vec<usize> {
        (0..self.x.len())
            .filter(|&i| self.x[i] >= TAU_DELTA && self.x[i] <= DEAD_ZONE_UPPER)
            .collect()
    }

    /// Exact rational coordinates for a χ^S/k-shaped point: every support
    /// entry becomes exactly 1/k, everything else exactly 0. Returns None if
    /// the point is not uniform on its support (beyond τ_Δ).
    pub fn exact_uniform_coords(&self) -> Option<Vec<BigRational>> {
        let supp = self.support();
        let k = supp.len();
        if k == 0 {
            return None;
        }
        let target = 1.0 / k as f64;
        for &i in &supp {
            if (self.x[i] - target).abs() > TAU_DELTA {
                return None;
            }
        }
        let mut out = vec![BigRational::zero(); self.x.len()];
        let mass = BigRational::new(BigInt::from(1), BigInt::from(k as u64));
        for &i in &supp {
            out[i] = mass.clone();
        }
        Some(out)
    }
}

/// How a simplex point relates to the minimizers of the program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Global,
    StrictLocal,
    LocalNonStrict,
    NotLocalMinimizer,
    Indeterminate,
}

/// One connected component of the induced support subgraph, with its mass.
#[derive(Debug, Clone, Serialize)]
pub struct CliqueComponent {
    pub vertices: Vec<usize>,
    pub mass: f64,
}

/// Structural evidence backing a classification.
#[derive(Debug, Clone)]
pub enum Witness {
    /// The support splits into exactly α cliques of mass 1/α each.
    CliquePartition { components: Vec<CliqueComponent> },
    /// A textual statement of the decisive (satisfied or violated) condition.
    Criterion { description: String },
    /// Entries in the dead zone; classification refused.
    DeadZone { entries: Vec<usize> },
}

#[derive(Debug, Clone)]
pub struct KktCertificate {
    /// Multiplier of the mass constraint Σxᵢ = 1.
    pub lambda: f64,
    /// Multipliers of the active bounds xⱼ ≥ 0, one per vertex outside the
    /// support, ascending by vertex.
    pub mu: Vec<(usize, f64)>,
    /// Active constraint gradients are linearly independent.
    pub cqc: bool,
    /// Stationarity holds and the bound multipliers are nonnegative.
    pub fooc: bool,
    /// Complementarity μⱼxⱼ = 0 within tolerance.
    pub cc: bool,
    /// Every active bound multiplier is strictly positive.
    pub scc: bool,
    /// Restricted Hessian positive semidefinite on the active tangent space.
    pub sonc: bool,
    /// Restricted Hessian positive definite on the active tangent space.
    pub sosc: bool,
}

#[derive(Debug, Clone)]
pub struct MinimizerReport {
    pub classification: Classification,
    pub support: Vec<usize>,
    pub witness: Witness,
    pub kkt: Option<KktCertificate>,
}

impl MinimizerReport {
    /// JSON with 1-based vertex labels (the external convention everywhere).
    pub fn to_json(&self) -> serde_json::Value {
        let witness = match &self.witness {
            Witness::CliquePartition { components } => json!({
                "type": "CliquePartition",
                "components": components.iter().map(|c| json!({
                    "vertices": c.vertices.iter().map(|v| v + 1).collect::<Vec<_>>(),
                    "mass": c.mass,
                })).collect::<Vec<_>>(),
            }),
            Witness::Criterion { description } => json!({
                "type": "Criterion",
                "description": description,
            }),
            Witness::DeadZone { entries } => json!({
                "type": "DeadZone",
                "entries": entries.iter().map(|v| v + 1).collect::<Vec<_>>(),
            }),
        };
        let kkt = self.kkt.as_ref().map(|k| {
            json!({
                "lambda": k.lambda,
                "mu": k.mu.iter().map(|(v, m)| json!({"vertex": v + 1, "value": m})).collect::<Vec<_>>(),
                "flags": {
                    "cqc": k.cqc, "fooc": k.fooc, "cc": k.cc,
                    "scc": k.scc, "sonc": k.sonc, "sosc": k.sosc,
                },
            })
        });
        json!({
            "classification": self.classification,
            "support": self.support.iter().map(|v| v + 1).collect::<Vec<_>>(),
            "witness": witness,
            "kkt": kkt,
        })
    }
}

/// Formats a vertex set with 1-based labels for witness messages.
fn label_set(vs: &[usize]) -> String {
    let labels: Vec<String> = vs.iter().map(|v| (v + 1).to_string()).collect();
    format!("{{{}}}", labels.join(","))
}

/// Tests whether `x` is a global minimizer of the plain program on `g`: the
/// support must split into exactly `alpha` connected components, each a
/// clique carrying mass 1/alpha.
pub fn classify_global(g: &Graph, x: &SimplexPoint, alpha: usize) -> (bool, Witness) {
    assert_eq!(x.len(), g.n(), "dimension mismatch");
    let supp_mask = x.support_mask();
    let components = g.components_of_mask(supp_mask);
    if components.len() != alpha {
        return (
            false,
            Witness::Criterion {
                description: format!(
                    "support splits into {} component(s); a global minimizer needs exactly α = {alpha}",
                    components.len()
                ),
            },
        );
    }
    let target = 1.0 / alpha as f64;
    let mut parts = Vec::with_capacity(components.len());
    for comp in components {
        let vertices = mask_to_vec(comp);
        if !g.is_clique_mask(comp) {
            return (
                false,
                Witness::Criterion {
                    description: format!(
                        "support component {} is not a clique",
                        label_set(&vertices)
                    ),
                },
            );
        }
        let mass: f64 = vertices.iter().map(|&i| x.coords()[i]).sum();
        if (mass - target).abs() > TAU_DELTA {
            return (
                false,
                Witness::Criterion {
                    description: format!(
                        "support component {} carries mass {mass}, expected 1/α = {target}",
                        label_set(&vertices)
                    ),
                },
            );
        }
        parts.push(CliqueComponent { vertices, mass });
    }
    (true, Witness::CliquePartition { components: parts })
}

/// Full classification of a simplex point against the plain program on `g`.
///
/// Points uniform on a stable support are decided exactly (maximality,
/// outside degrees, private-neighbor cliques); points whose support induces
/// edges are decided only when the clique-partition test certifies a global
/// minimizer. Anything else the theory does not characterize and is reported
/// `Indeterminate`.
pub fn classify_point(g: &Graph, x: &SimplexPoint) -> MinimizerReport {
    assert_eq!(x.len(), g.n(), "dimension mismatch");
    let dead = x.dead_zone_entries();
    if !dead.is_empty() {
        return MinimizerReport {
            classification: Classification::Indeterminate,
            support: x.support(),
            witness: Witness::DeadZone { entries: dead },
            kkt: None,
        };
    }
    let alpha = stability_number(g);
    let support = x.support();
    let kkt = Some(kkt_check(&SimplexQP::motzkin_straus(g), x));

    let (is_global, global_witness) = classify_global(g, x, alpha);
    if is_global {
        return MinimizerReport {
            classification: Classification::Global,
            support,
            witness: global_witness,
            kkt,
        };
    }

    let supp_mask = x.support_mask();
    if !g.is_stable_mask(supp_mask) {
        return MinimizerReport {
            classification: Classification::Indeterminate,
            support,
            witness: Witness::Criterion {
                description: "support induces at least one edge and the clique-partition test \
                              fails; no criterion applies"
                    .into(),
            },
            kkt,
        };
    }

    // Stable support: a local minimizer must be uniform on a maximal stable
    // set, so non-uniform mass settles the question immediately.
    let k = support.len();
    let target = 1.0 / k as f64;
    if support.iter().any(|&i| (x.coords()[i] - target).abs() > TAU_DELTA) {
        return MinimizerReport {
            classification: Classification::NotLocalMinimizer,
            support,
            witness: Witness::Criterion {
                description: "stable support but non-uniform masses; local minimizers with \
                              stable support are uniform"
                    .into(),
            },
            kkt,
        };
    }

    // x = χ^S/|S| with S stable. Maximality first.
    for j in 0..g.n() {
        if supp_mask & (1 << j) != 0 {
            continue;
        }
        if g.adj_mask(j) & supp_mask == 0 {
            return MinimizerReport {
                classification: Classification::NotLocalMinimizer,
                support,
                witness: Witness::Criterion {
                    description: format!(
                        "support is not a maximal stable set: vertex {} has no neighbor in it",
                        j + 1
                    ),
                },
                kkt,
            };
        }
    }

    // Private outside neighbors N_1(i) = {j ∉ S : N_S(j) = {i}}.
    let mut ones: Vec<(usize, usize)> = Vec::new(); // (outside vertex, its unique S-neighbor)
    for j in 0..g.n() {
        if supp_mask & (1 << j) != 0 {
            continue;
        }
        let in_s = g.adj_mask(j) & supp_mask;
        if in_s.count_ones() == 1 {
            ones.push((j, in_s.trailing_zeros() as usize));
        }
    }
    if ones.is_empty() {
        return MinimizerReport {
            classification: Classification::StrictLocal,
            support,
            witness: Witness::Criterion {
                description: "support is a maximal stable set and every outside vertex has at \
                              least two neighbors in it"
                    .into(),
            },
            kkt,
        };
    }
    for &i in &support {
        let n1: Vec<usize> = ones.iter().filter(|&&(_, s)| s == i).map(|&(j, _)| j).collect();
        if n1.len() >= 2 {
            let n1_mask = n1.iter().fold(0u64, |m, &j| m | (1 << j));
            if !g.is_clique_mask(n1_mask) {
                return MinimizerReport {
                    classification: Classification::NotLocalMinimizer,
                    support,
                    witness: Witness::Criterion {
                        description: format!(
                            "N_1({}) = {} is not a clique",
                            i + 1,
                            label_set(&n1)
                        ),
                    },
                    kkt,
                };
            }
        }
    }
    MinimizerReport {
        classification: Classification::LocalNonStrict,
        support,
        witness: Witness::Criterion {
            description: "support is a maximal stable set, some outside vertex has exactly one \
                          neighbor in it, and every private neighborhood is a clique"
                .into(),
        },
        kkt,
    }
}

/// KKT certificate at `x` for minimizing the form over the simplex.
///
/// Stationarity: 2Mx = λ·1 + Σ_{j inactive} μⱼ eⱼ, with the bounds written
/// as xⱼ ≥ 0, so μⱼ = (2Mx)ⱼ − λ. The second-order flags restrict the
/// Hessian 2M to the null space of all active constraint gradients.
pub fn kkt_check(qp: &SimplexQP, x: &SimplexPoint) -> KktCertificate {
    assert_eq!(x.len(), qp.n(), "dimension mismatch");
    let n = qp.n();
    let grad: Vec<f64> = {
        let mut g = qp.m.mul_vec(x.coords());
        for v in g.iter_mut() {
            *v *= 2.0;
        }
        g
    };
    let support = x.support();
    let k = support.len();
    // Active gradients: the all-ones vector plus eⱼ for each inactive bound;
    // independent exactly when some coordinate is in the support.
    let cqc = k > 0;

    let lambda = if k > 0 {
        support.iter().map(|&i| grad[i]).sum::<f64>() / k as f64
    } else {
        0.0
    };
    let stationary = support.iter().all(|&i| (grad[i] - lambda).abs() <= KKT_TOL);

    let mut mu = Vec::new();
    let mut mu_nonneg = true;
    let mut cc_residual = 0.0f64;
    for j in 0..n {
        if x.coords()[j] > TAU_DELTA {
            continue;
        }
        let m = grad[j] - lambda;
        if m < -KKT_TOL {
            mu_nonneg = false;
        }
        cc_residual = cc_residual.max((m * x.coords()[j]).abs());
        mu.push((j, m));
    }
    let fooc = stationary && mu_nonneg;
    let cc = cc_residual <= KKT_TOL;
    let scc = fooc && mu.iter().all(|&(_, m)| m > KKT_TOL);

    // Orthonormal (Helmert) basis of {v : v zero off the support, Σv = 0}.
    let dim = k.saturating_sub(1);
    let (sonc, sosc) = if dim == 0 {
        (true, true) // the restricted space is trivial
    } else {
        let mut basis = vec![vec![0.0; n]; dim];
        for (t, row) in basis.iter_mut().enumerate() {
            let norm = ((t + 1) * (t + 2)) as f64;
            let norm = norm.sqrt();
            for &s in support.iter().take(t + 1) {
                row[s] = 1.0 / norm;
            }
            row[support[t + 1]] = -((t + 1) as f64) / norm;
        }
        let mut h = vec![0.0; dim * dim];
        for a in 0..dim {
            let ma = qp.m.mul_vec(&basis[a]);
            for b in a..dim {
                let val = 2.0 * crate::solver::linalg::dot(&ma, &basis[b]);
                h[a * dim + b] = val;
                h[b * dim + a] = val;
            }
        }
        let eigs = sym_eigvals(dim, &h).expect("eigensolver convergence on a small restricted Hessian");
        let min_eig = eigs[0];
        (min_eig >= -EIG_TOL, min_eig > EIG_TOL)
    };

    KktCertificate { lambda, mu, cqc, fooc, cc, scc, sonc, sosc }
}

/// The plain program has finitely many global minimizers exactly when the
/// graph has no critical edge.
pub fn has_finitely_many_global_minimizers(g: &Graph) -> bool {
    matches!(
        criticality_class(g),
        CriticalityClass::Acritical | CriticalityClass::EdgelessTrivial
    )
}

/// The edge-reweighted program (all edges doubled except `e`) has finitely
/// many global minimizers iff `e` is not critical; its optimal value is
/// 1/α(G) either way.
pub fn edge_program_has_finite_minimizers(
    g: &Graph,
    u: usize,
    v: usize,
) -> Result<bool, GraphError> {
    Ok(!is_critical_edge(g, u, v)?)
}

/// Moves all of xⱼ's mass onto xᵢ and vice versa, producing the segment
/// endpoints of the mass-shift family. Requires the 2×2 block of M on
/// {i, j} to be constant (M_ii = M_jj = M_ij) and both coordinates positive;
/// along such a segment the objective of a local minimizer is constant.
pub fn shift_mass(
    qp: &SimplexQP,
    x: &SimplexPoint,
    i: usize,
    j: usize,
) -> Result<(SimplexPoint, SimplexPoint), MotzkinError> {
    let n = qp.n();
    if x.len() != n {
        return Err(MotzkinError::DimensionMismatch { point: x.len(), matrix: n });
    }
    if i >= n || j >= n || i == j {
        return Err(MotzkinError::ShiftPrecondition(format!(
            "need two distinct vertices within 1..{n}"
        )));
    }
    let (mii, mjj, mij) = (qp.m.get(i, i), qp.m.get(j, j), qp.m.get(i, j));
    if mii != mjj || mii != mij {
        return Err(MotzkinError::ShiftPrecondition(format!(
            "matrix block on {{{},{}}} is not constant: M_ii={mii}, M_jj={mjj}, M_ij={mij}",
            i + 1,
            j + 1
        )));
    }
    let (xi, xj) = (x.coords()[i], x.coords()[j]);
    if xi <= TAU_DELTA || xj <= TAU_DELTA {
        return Err(MotzkinError::ShiftPrecondition(format!(
            "both coordinates must carry mass: x_{} = {xi}, x_{} = {xj}",
            i + 1,
            j + 1
        )));
    }
    let mut tilde = x.coords().to_vec();
    tilde[i] = xi + xj;
    tilde[j] = 0.0;
    let mut bar = x.coords().to_vec();
    bar[i] = 0.0;
    bar[j] = xj + xi;
    Ok((SimplexPoint::new(tilde)?, SimplexPoint::new(bar)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::One;

    fn rational(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    /// The 5-vertex graph with edges {1,3},{2,4},{2,5} (1-based labels).
    fn two_private_neighbors_graph() -> Graph {
        Graph::new(5, [(0, 2), (1, 3), (1, 4)]).unwrap()
    }

    #[test]
    fn evaluate_worked_examples() {
        let c5 = Graph::cycle(5);
        let qp = SimplexQP::motzkin_straus(&c5);
        let x = SimplexPoint::uniform_on(&[0, 2], 5).unwrap();
        assert_eq!(qp.evaluate(&x).unwrap(), 0.5);

        let e1 = SimplexPoint::vertex(0, 5).unwrap();
        assert_eq!(qp.evaluate(&e1).unwrap(), 1.0);

        let qp_eps = SimplexQP::perturbed(&c5, 0.5);
        let edge_point = SimplexPoint::new(vec![0.5, 0.5, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(qp_eps.evaluate(&edge_point).unwrap(), 0.5 + 1.5 / 2.0);

        let wrong = SimplexPoint::vertex(0, 4).unwrap();
        assert!(matches!(
            qp.evaluate(&wrong),
            Err(MotzkinError::DimensionMismatch { point: 4, matrix: 5 })
        ));
    }

    #[test]
    fn rational_evaluation_is_exact() {
        let c5 = Graph::cycle(5);
        let qp = SimplexQP::motzkin_straus(&c5);
        let half = rational(1, 2);
        let x = vec![
            half.clone(),
            BigRational::zero(),
            half,
            BigRational::zero(),
            BigRational::zero(),
        ];
        assert_eq!(qp.evaluate_rational(&x), rational(1, 2));
    }

    #[test]
    fn simplex_point_validation() {
        assert!(SimplexPoint::new(vec![0.5, 0.5]).is_ok());
        assert!(SimplexPoint::new(vec![0.6, 0.6]).is_err());
        assert!(SimplexPoint::new(vec![1.5, -0.5]).is_err());
        assert!(SimplexPoint::new(vec![]).is_err());
        let near = SimplexPoint::new(vec![0.5 + 1e-10, 0.5 - 1e-10]).unwrap();
        assert_eq!(near.support(), vec![0, 1]);
        let dead = SimplexPoint::new(vec![1.0 - 1e-8, 1e-8]).unwrap();
        assert_eq!(dead.dead_zone_entries(), vec![1]);
    }

    #[test]
    fn classify_global_on_c5() {
        let c5 = Graph::cycle(5);
        let x = SimplexPoint::uniform_on(&[0, 2], 5).unwrap();
        let (ok, w) = classify_global(&c5, &x, 2);
        assert!(ok);
        match w {
            Witness::CliquePartition { components } => {
                assert_eq!(components.len(), 2);
                assert_eq!(components[0].vertices, vec![0]);
                assert_eq!(components[1].vertices, vec![2]);
            }
            _ => panic!("expected clique partition"),
        }

        // Critical-edge family: masses t/2 and (1−t)/2 on the edge {1,2}.
        let t = 0.3;
        let x = SimplexPoint::new(vec![t / 2.0, (1.0 - t) / 2.0, 0.0, 0.5, 0.0]).unwrap();
        let (ok, w) = classify_global(&c5, &x, 2);
        assert!(ok, "edge component with full mass 1/2 is a valid clique component");
        match w {
            Witness::CliquePartition { components } => {
                assert_eq!(components[0].vertices, vec![0, 1]);
                assert!((components[0].mass - 0.5).abs() < 1e-12);
            }
            _ => panic!("expected clique partition"),
        }
    }

    #[test]
    fn classify_global_rejects_edge_support_on_acritical_graphs() {
        let c6 = Graph::cycle(6);
        let x = SimplexPoint::new(vec![0.2, 0.3, 0.0, 0.5, 0.0, 0.0]).unwrap();
        let (ok, w) = classify_global(&c6, &x, 3);
        assert!(!ok);
        assert!(matches!(w, Witness::Criterion { .. }));
    }

    #[test]
    fn classify_point_worked_examples() {
        let g = two_private_neighbors_graph();
        let x = SimplexPoint::uniform_on(&[0, 1], 5).unwrap();
        let report = classify_point(&g, &x);
        assert_eq!(report.classification, Classification::NotLocalMinimizer);
        match &report.witness {
            Witness::Criterion { description } => {
                assert!(description.contains("N_1(2) = {4,5}"), "{description}");
            }
            _ => panic!("expected criterion witness"),
        }

        let k234 = Graph::complete_multipartite(&[2, 3, 4]);
        let x = SimplexPoint::uniform_on(&[2, 3, 4], 9).unwrap();
        let report = classify_point(&k234, &x);
        assert_eq!(report.classification, Classification::StrictLocal);

        let c5 = Graph::cycle(5);
        let e1 = SimplexPoint::vertex(0, 5).unwrap();
        let report = classify_point(&c5, &e1);
        assert_eq!(report.classification, Classification::NotLocalMinimizer);
        match &report.witness {
            Witness::Criterion { description } => {
                assert!(description.contains("not a maximal stable set"), "{description}");
            }
            _ => panic!("expected criterion witness"),
        }

        let global = SimplexPoint::uniform_on(&[0, 2], 5).unwrap();
        assert_eq!(classify_point(&c5, &global).classification, Classification::Global);
    }

    #[test]
    fn classify_point_local_nonstrict_case() {
        // C5 plus a vertex adjacent to {4, 5} (1-based): S = {2, 4} is maximal,
        // the private neighborhoods are {1} for vertex 2 and {5,6} for vertex
        // 4, and {5,6} is an edge — a non-strict local minimizer that is not
        // global (α = 3).
        let g = Graph::new(6, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (3, 5), (4, 5)]).unwrap();
        assert_eq!(stability_number(&g), 3);
        let x = SimplexPoint::uniform_on(&[1, 3], 6).unwrap();
        let report = classify_point(&g, &x);
        assert_eq!(report.classification, Classification::LocalNonStrict);
        let kkt = report.kkt.unwrap();
        assert!(kkt.fooc && kkt.sonc && !kkt.scc);
    }

    #[test]
    fn classify_point_rejects_nonuniform_stable_support() {
        let c6 = Graph::cycle(6);
        let x = SimplexPoint::new(vec![0.6, 0.0, 0.4, 0.0, 0.0, 0.0]).unwrap();
        let report = classify_point(&c6, &x);
        assert_eq!(report.classification, Classification::NotLocalMinimizer);
    }

    #[test]
    fn classify_point_dead_zone_refusal() {
        let c5 = Graph::cycle(5);
        let x = SimplexPoint::new(vec![0.5 - 1e-8, 0.0, 0.5, 0.0, 1e-8]).unwrap();
        let report = classify_point(&c5, &x);
        assert_eq!(report.classification, Classification::Indeterminate);
        assert!(matches!(report.witness, Witness::DeadZone { .. }));
        assert!(report.kkt.is_none());
    }

    #[test]
    fn classify_point_indeterminate_for_uncharacterized_support() {
        let c6 = Graph::cycle(6);
        // Support {1,2,4} (0-based {0,1,3}) contains the edge {1,2} but is
        // not a clique-partition global minimizer.
        let x = SimplexPoint::new(vec![0.25, 0.25, 0.0, 0.5, 0.0, 0.0]).unwrap();
        let report = classify_point(&c6, &x);
        assert_eq!(report.classification, Classification::Indeterminate);
    }

    #[test]
    fn kkt_multipliers_match_the_closed_formulas() {
        let c6 = Graph::cycle(6);
        let qp = SimplexQP::motzkin_straus(&c6);
        let x = SimplexPoint::uniform_on(&[0, 2, 4], 6).unwrap();
        let cert = kkt_check(&qp, &x);
        assert!((cert.lambda - 2.0 / 3.0).abs() < 1e-12);
        for &(_, m) in &cert.mu {
            assert!((m - 2.0 / 3.0).abs() < 1e-12);
        }
        assert!(cert.cqc && cert.fooc && cert.cc && cert.scc && cert.sonc && cert.sosc);

        let c5 = Graph::cycle(5);
        let qp = SimplexQP::motzkin_straus(&c5);
        let x = SimplexPoint::uniform_on(&[0, 2], 5).unwrap();
        let cert = kkt_check(&qp, &x);
        assert!((cert.lambda - 1.0).abs() < 1e-12);
        let mu4 = cert.mu.iter().find(|&&(v, _)| v == 4).unwrap().1;
        assert!(mu4.abs() < 1e-12, "vertex 5 has a single support neighbor");
        assert!(cert.fooc && !cert.scc);

        let qp = SimplexQP::perturbed(&c5, 0.1);
        let cert = kkt_check(&qp, &x);
        let mu4 = cert.mu.iter().find(|&&(v, _)| v == 4).unwrap().1;
        assert!((mu4 - 0.1).abs() < 1e-12);
        assert!(cert.scc, "perturbation makes every multiplier strictly positive");
    }

    #[test]
    fn kkt_rejects_unbalanced_gradients() {
        // e_1 on C5: single-vertex support is stationary trivially, but the
        // non-adjacent bounds get negative multipliers, so FOOC fails.
        let c5 = Graph::cycle(5);
        let qp = SimplexQP::motzkin_straus(&c5);
        let x = SimplexPoint::vertex(0, 5).unwrap();
        let cert = kkt_check(&qp, &x);
        assert!(!cert.fooc);
        let mu2 = cert.mu.iter().find(|&&(v, _)| v == 2).unwrap().1;
        assert!((mu2 + 2.0).abs() < 1e-12);
    }

    #[test]
    fn finitely_many_minimizers_tracks_criticality() {
        assert!(!has_finitely_many_global_minimizers(&Graph::cycle(5)));
        assert!(has_finitely_many_global_minimizers(&Graph::cycle(6)));
        assert!(has_finitely_many_global_minimizers(&Graph::empty(4)));
        let h1 = Graph::cycle(5).add_isolated(1).unwrap();
        assert!(!has_finitely_many_global_minimizers(&h1));
    }

    #[test]
    fn edge_program_finiteness() {
        let c5 = Graph::cycle(5);
        assert!(!edge_program_has_finite_minimizers(&c5, 0, 1).unwrap());
        let c6 = Graph::cycle(6);
        assert!(edge_program_has_finite_minimizers(&c6, 0, 1).unwrap());
        assert!(edge_program_has_finite_minimizers(&c6, 0, 2).is_err());
        let pendant = Graph::cycle(5).add_isolated(1).unwrap();
        let with_pendant = Graph::new(
            6,
            pendant.edges().iter().copied().chain([(4, 5)]).collect::<Vec<_>>(),
        )
        .unwrap();
        assert!(edge_program_has_finite_minimizers(&with_pendant, 4, 5).unwrap());
    }

    #[test]
    fn mass_shift_family_on_c5() {
        let c5 = Graph::cycle(5);
        let qp = SimplexQP::motzkin_straus(&c5);
        let x = SimplexPoint::new(vec![0.15, 0.35, 0.0, 0.5, 0.0]).unwrap();
        let base = qp.evaluate(&x).unwrap();
        assert!((base - 0.5).abs() < 1e-12);

        let (tilde, bar) = shift_mass(&qp, &x, 0, 1).unwrap();
        assert_eq!(tilde.coords(), &[0.5, 0.0, 0.0, 0.5, 0.0]);
        assert_eq!(bar.coords(), &[0.0, 0.5, 0.0, 0.5, 0.0]);
        assert!((qp.evaluate(&tilde).unwrap() - base).abs() < 1e-12);
        assert!((qp.evaluate(&bar).unwrap() - base).abs() < 1e-12);
        // Midpoint of the segment, and the original point, agree too.
        let mid: Vec<f64> = tilde
            .coords()
            .iter()
            .zip(bar.coords())
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        assert!((qp.form(&mid) - base).abs() < 1e-12);

        // Non-constant block: vertices 1 and 3 are non-adjacent (M_ij = 0).
        assert!(shift_mass(&qp, &x, 0, 2).is_err());
        // Zero mass on a shifted coordinate.
        assert!(shift_mass(&qp, &x, 0, 4).is_err());
    }

    #[test]
    fn strict_local_iff_kkt_strict_conditions() {
        // For χ^S/|S| with S maximal stable: "every outside vertex has at
        // least two neighbors in S" ⇔ FOOC ∧ SCC ∧ SOSC. Checked over every
        // maximal stable set of a small corpus.
        for g in [
            Graph::cycle(5),
            Graph::cycle(6),
            Graph::path(4),
            Graph::complete_multipartite(&[2, 3, 4]),
            Graph::petersen(),
        ] {
            let qp = SimplexQP::motzkin_straus(&g);
            for s in crate::combinatorics::maximal_stable_sets(&g).unwrap() {
                let s_mask = s.iter().fold(0u64, |m, &i| m | (1 << i));
                let structurally_strict = (0..g.n())
                    .filter(|&j| s_mask & (1 << j) == 0)
                    .all(|j| (g.adj_mask(j) & s_mask).count_ones() >= 2);
                let x = SimplexPoint::uniform_on(&s, g.n()).unwrap();
                let cert = kkt_check(&qp, &x);
                let strict_kkt = cert.fooc && cert.scc && cert.sosc;
                assert_eq!(
                    structurally_strict, strict_kkt,
                    "strictness mismatch for S = {s:?} in graph with {} vertices",
                    g.n()
                );
                // And the classifier never calls a maximal-support point
                // NotLocalMinimizer when the strict conditions hold.
                if strict_kkt {
                    let report = classify_point(&g, &x);
                    assert!(matches!(
                        report.classification,
                        Classification::StrictLocal | Classification::Global
                    ));
                }
            }
        }
    }

    #[test]
    fn report_json_uses_one_based_labels() {
        let c5 = Graph::cycle(5);
        let x = SimplexPoint::uniform_on(&[0, 2], 5).unwrap();
        let v = classify_point(&c5, &x).to_json();
        assert_eq!(v["classification"], "Global");
        assert_eq!(v["support"], serde_json::json!([1, 3]));
        assert_eq!(v["witness"]["type"], "CliquePartition");
        assert_eq!(v["witness"]["components"][0]["vertices"], serde_json::json!([1]));
        assert!(v["kkt"]["flags"]["fooc"].as_bool().unwrap());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // Central differences of the raw form against 2Mx at pseudo-random
        // simplex points.
        let g = Graph::petersen();
        let qp = SimplexQP::motzkin_straus(&g);
        let n = g.n();
        let mut seed = 12345u64;
        let mut rand01 = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let mut x: Vec<f64> = (0..n).map(|_| rand01() + 1e-3).collect();
            let total: f64 = x.iter().sum();
            for v in x.iter_mut() {
                *v /= total;
            }
            let mut grad = qp.m.mul_vec(&x);
            for v in grad.iter_mut() {
                *v *= 2.0;
            }
            let h = 1e-6;
            for i in 0..n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (qp.form(&xp) - qp.form(&xm)) / (2.0 * h);
                assert!(
                    (fd - grad[i]).abs() <= 1e-6 * (1.0 + grad[i].abs()),
                    "coordinate {i}: fd {fd} vs analytic {}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn perturbed_constructor_rejects_nonpositive_eps() {
        let g = Graph::cycle(5);
        let result = std::panic::catch_unwind(|| SimplexQP::perturbed(&g, 0.0));
        assert!(result.is_err());
    }

    #[test]
    fn exact_uniform_coords_round_trip() {
        let x = SimplexPoint::uniform_on(&[1, 4, 5], 7).unwrap();
        let exact = x.exact_uniform_coords().unwrap();
        assert_eq!(exact[1], rational(1, 3));
        assert_eq!(exact[0], BigRational::zero());
        let sum: BigRational = exact.iter().cloned().sum();
        assert!(sum.is_one());

        let nonuniform = SimplexPoint::new(vec![0.6, 0.4]).unwrap();
        assert!(nonuniform.exact_uniform_coords().is_none());
    }
}
