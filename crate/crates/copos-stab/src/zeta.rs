//! The linear bound hierarchy ζ^(r): least t such that the polynomial
//! (Σxᵢ)^r · xᵀ(t(I+A_G) − J)x has only nonnegative coefficients, together
//! with its ε-perturbed variant. Values are exact rationals throughout; the
//! perturbation provably never changes the value, which the enumeration path
//! re-checks from scratch.

use num::rational::BigRational;
use num::{BigInt, ToPrimitive};
use serde::Serialize;
use serde_json::json;

use crate::combinatorics::{
    beta_star_enumerate, beta_star_from_alpha, stability_number, CombinatoricsError,
};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ZetaMethod {
    ClosedForm,
    Enumeration,
}

/// Value of ζ^(r)_ε(G) with the discrete minimum β* that determines it.
#[derive(Debug, Clone)]
pub struct ZetaResult {
    pub r: usize,
    pub eps: f64,
    /// `None` means the defining program is infeasible (happens exactly when
    /// r < α(G) − 1, equivalently β* = r+2).
    pub value: Option<BigRational>,
    pub beta_star: u64,
    pub method: ZetaMethod,
}

impl ZetaResult {
    fn from_beta_star(r: usize, eps: f64, beta_star: u64, method: ZetaMethod) -> Self {
        let target = (r + 2) as u64;
        debug_assert!(beta_star >= target);
        let value = (beta_star > target).then(|| {
            BigRational::new(
                BigInt::from(((r + 1) * (r + 2)) as u64),
                BigInt::from(beta_star - target),
            )
        });
        ZetaResult { r, eps, value, beta_star, method }
    }

    pub fn is_feasible(&self) -> bool {
        self.value.is_some()
    }

    /// Greatest integer ≤ value; callers must check feasibility first.
    pub fn floor(&self) -> Option<u64> {
        self.value.as_ref().map(|v| {
            v.floor()
                .to_integer()
                .to_u64()
                .expect("zeta values are small positive rationals")
        })
    }

    pub fn value_f64(&self) -> Option<f64> {
        self.value.as_ref().map(|v| v.to_f64().expect("small rational"))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let value = self.value.as_ref().map(|v| {
            json!({
                "num": v.numer().to_i64().expect("zeta numerators are small"),
                "den": v.denom().to_i64().expect("zeta denominators are small"),
            })
        });
        json!({
            "r": self.r,
            "eps": self.eps,
            "feasible": self.is_feasible(),
            "value": value,
            "beta_star": self.beta_star,
            "method": self.method,
        })
    }
}

/// ζ^(r)_ε(G) by the closed form: β* from the stability number, then
/// t = (r+1)(r+2)/(β* − (r+2)), infeasible when β* = r+2. The perturbation
/// does not enter the value; it is recorded for reporting only.
pub fn zeta(g: &Graph, r: usize, eps: f64) -> ZetaResult {
    assert!(eps >= 0.0 && eps.is_finite(), "perturbation must be a finite nonnegative real");
    let alpha = stability_number(g);
    let bs = beta_star_from_alpha(alpha, r);
    debug_assert_eq!(bs == (r + 2) as u64, r + 1 < alpha);
    ZetaResult::from_beta_star(r, eps, bs, ZetaMethod::ClosedForm)
}

/// ζ^(r)_ε(G) with the discrete minimum found by exhausting I(n, r+2);
/// makes no use of the stability number and must agree with [`zeta`] exactly.
pub fn zeta_enumerate(g: &Graph, r: usize, eps: f64) -> Result<ZetaResult, CombinatoricsError> {
    assert!(eps >= 0.0 && eps.is_finite(), "perturbation must be a finite nonnegative real");
    let eps_exact = BigRational::from_float(eps).expect("finite float");
    let enumeration = beta_star_enumerate(g, r, &eps_exact)?;
    // For ε ≥ 0 some minimizer has stable support, where the edge term
    // vanishes and the value is a plain integer.
    assert!(
        enumeration.min.is_integer(),
        "the discrete minimum is attained on a stable support"
    );
    let bs = enumeration
        .min
        .to_integer()
        .to_u64()
        .expect("discrete minimum is a small positive integer");
    Ok(ZetaResult::from_beta_star(r, eps, bs, ZetaMethod::Enumeration))
}

/// The order α(G)² − 1 from which ⌊ζ^(r)(G)⌋ = α(G) holds, verified on the
/// instance: the floor is exact at the threshold and the value still exceeds
/// α+1 one order below (for α ≥ 2).
pub fn zeta_rounding_threshold(g: &Graph) -> usize {
    let alpha = stability_number(g);
    let threshold = alpha * alpha - 1;
    let at = zeta(g, threshold, 0.0);
    assert_eq!(at.floor(), Some(alpha as u64), "floor(ζ) at the threshold order is α");
    if alpha >= 2 {
        let below = zeta(g, threshold - 1, 0.0)
            .value
            .expect("threshold − 1 ≥ α − 1, so the program is feasible");
        assert!(
            below >= BigRational::from(BigInt::from((alpha + 1) as u64)),
            "one order below the threshold the bound has not yet rounded to α"
        );
    }
    threshold
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c5_low_orders() {
        let c5 = Graph::cycle(5);
        let r0 = zeta(&c5, 0, 0.0);
        assert!(!r0.is_feasible());
        assert_eq!(r0.beta_star, 2);

        let r1 = zeta(&c5, 1, 0.0);
        assert_eq!(r1.beta_star, 5);
        assert_eq!(r1.value, Some(BigRational::from(BigInt::from(3))));

        let r3 = zeta(&c5, 3, 0.0);
        assert_eq!(r3.beta_star, 13);
        assert_eq!(
            r3.value,
            Some(BigRational::new(BigInt::from(20), BigInt::from(8)))
        );
        assert_eq!(r3.floor(), Some(2));
    }

    #[test]
    fn complete_graphs_are_exact_at_every_order() {
        for n in 2..6 {
            for r in 0..5 {
                let z = zeta(&Graph::complete(n), r, 0.0);
                assert_eq!(z.beta_star, ((r + 2) * (r + 2)) as u64);
                assert_eq!(z.value, Some(BigRational::from(BigInt::from(1))));
            }
        }
    }

    #[test]
    fn enumeration_matches_closed_form_with_and_without_perturbation() {
        for g in [Graph::cycle(5), Graph::cycle(6), Graph::path(4), Graph::petersen()] {
            for r in 0..4 {
                let closed = zeta(&g, r, 0.0);
                for eps in [0.0, 0.1, 0.7, 1.0] {
                    let enumerated = zeta_enumerate(&g, r, eps).unwrap();
                    assert_eq!(enumerated.value, closed.value, "r={r} eps={eps}");
                    assert_eq!(enumerated.beta_star, closed.beta_star);
                }
            }
        }
    }

    #[test]
    fn c6_order_two() {
        let z = zeta_enumerate(&Graph::cycle(6), 2, 0.0).unwrap();
        assert_eq!(z.beta_star, 6);
        assert_eq!(z.value, Some(BigRational::from(BigInt::from(6))));
    }

    #[test]
    fn rounding_thresholds() {
        assert_eq!(zeta_rounding_threshold(&Graph::cycle(5)), 3);
        assert_eq!(zeta_rounding_threshold(&Graph::complete(7)), 0);
        assert_eq!(zeta_rounding_threshold(&Graph::cycle(6)), 8);
    }

    #[test]
    fn json_shape_keeps_rationals_exact() {
        let v = zeta(&Graph::cycle(5), 3, 0.0).to_json();
        assert_eq!(v["value"]["num"], 5);
        assert_eq!(v["value"]["den"], 2);
        assert_eq!(v["feasible"], true);
        assert_eq!(v["method"], "ClosedForm");
        let inf = zeta(&Graph::cycle(5), 0, 0.0).to_json();
        assert_eq!(inf["value"], serde_json::Value::Null);
        assert_eq!(inf["feasible"], false);
    }
}
