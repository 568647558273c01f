//! Randomized cross-checks: every law here compares two independent routes
//! to the same quantity (format round trips, closed forms versus
//! enumeration, bound orderings, exact combinatorics versus brute force).

mod common;

use num::{BigInt, BigRational};
use proptest::prelude::*;

use copos_stab::combinatorics as comb;
use copos_stab::graph::Graph;
use copos_stab::io;
use copos_stab::motzkin::{self, Classification, SimplexPoint};
use copos_stab::solver;
use copos_stab::sos;
use copos_stab::zeta;

use common::{alpha_brute_force, cfg, finite};

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * n.saturating_sub(1) / 2;
        proptest::collection::vec(any::<bool>(), pairs).prop_map(move |bits| {
            let mut edges = Vec::new();
            let mut k = 0;
            for u in 0..n {
                for v in u + 1..n {
                    if bits[k] {
                        edges.push((u, v));
                    }
                    k += 1;
                }
            }
            Graph::new(n, edges).expect("generated graph")
        })
    })
}

proptest! {
    #[test]
    fn dimacs_round_trip(g in graph_strategy(8)) {
        let text = io::emit_dimacs(&g);
        let back = io::parse_dimacs(&text).expect("own output parses");
        prop_assert_eq!(back.n(), g.n());
        prop_assert_eq!(back.edges(), g.edges());
    }

    #[test]
    fn json_round_trip(g in graph_strategy(8)) {
        let text = io::emit_graph_json(&g);
        let back = io::parse_graph_json(&text).expect("own output parses");
        prop_assert_eq!(back.n(), g.n());
        prop_assert_eq!(back.edges(), g.edges());
    }

    #[test]
    fn stability_number_matches_brute_force(g in graph_strategy(8)) {
        prop_assert_eq!(comb::stability_number(&g), alpha_brute_force(&g));
    }

    #[test]
    fn critical_edge_queries_match_direct_search(g in graph_strategy(7)) {
        let (alpha, _trace) = comb::alpha_via_critical_edge_queries(&g);
        prop_assert_eq!(alpha, alpha_brute_force(&g));
    }

    #[test]
    fn zeta_closed_form_matches_enumeration(
        g in graph_strategy(6),
        r in 0usize..=4,
        eps_tenths in 0u32..=10,
    ) {
        let eps = f64::from(eps_tenths) / 10.0;
        let closed = zeta::zeta(&g, r, eps);
        let eps_exact = BigRational::new(BigInt::from(eps_tenths), BigInt::from(10));
        let enumerated = zeta::zeta_enumerate(&g, r, eps).expect("within cap");
        let direct = comb::beta_star_enumerate(&g, r, &eps_exact).expect("within cap");
        prop_assert_eq!(BigRational::from(BigInt::from(closed.beta_star)), direct.min);
        prop_assert_eq!(&closed.value, &enumerated.value);
        prop_assert_eq!(closed.is_feasible(), enumerated.is_feasible());
    }

    #[test]
    fn zeta_is_monotone_and_feasible_above_alpha_minus_one(g in graph_strategy(7)) {
        let alpha = comb::stability_number(&g);
        let mut prev: Option<BigRational> = None;
        for r in 0..=alpha * alpha {
            let z = zeta::zeta(&g, r, 0.0);
            prop_assert_eq!(z.is_feasible(), r + 1 >= alpha);
            if let Some(v) = z.value.clone() {
                if let Some(p) = prev.take() {
                    prop_assert!(v <= p, "zeta rose from {p} to {v} at order {r}");
                }
                prev = Some(v);
            }
        }
    }

    #[test]
    fn uniform_point_on_a_maximum_stable_set_is_global(g in graph_strategy(7)) {
        let sets = comb::maximum_stable_sets(&g).expect("small graph");
        for s in sets {
            let x = SimplexPoint::uniform_on(&s, g.n()).expect("stable set point");
            let report = motzkin::classify_point(&g, &x);
            prop_assert_eq!(report.classification, Classification::Global);
        }
    }

    #[test]
    fn global_claims_imply_the_optimal_value(
        g in graph_strategy(6),
        mask in 1u64..,
    ) {
        let mask = mask % (1u64 << g.n());
        prop_assume!(mask != 0);
        let support: Vec<usize> =
            (0..g.n()).filter(|&v| mask >> v & 1 == 1).collect();
        let x = SimplexPoint::uniform_on(&support, g.n()).expect("uniform point");
        let report = motzkin::classify_point(&g, &x);
        if report.classification == Classification::Global {
            let value = motzkin::SimplexQP::motzkin_straus(&g)
                .evaluate(&x)
                .expect("evaluation");
            let alpha = comb::stability_number(&g) as f64;
            prop_assert!(
                (value - 1.0 / alpha).abs() <= 1e-6,
                "claimed global at value {value}, optimum is {}",
                1.0 / alpha
            );
        }
    }
}

// Conic solves are comparatively expensive; keep the randomized coverage
// small per run.
proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn theta_bounds_sandwich_alpha_and_shrink_with_order(g in graph_strategy(6)) {
        let alpha_int = comb::stability_number(&g);
        let alpha = alpha_int as f64;
        let cover = comb::clique_cover_number(&g) as f64;
        let b0 = sos::theta(&g, 0, 0.0, &cfg()).expect("theta order 0");
        let t0 = finite(&b0);
        let t1 = finite(&sos::theta(&g, 1, 0.0, &cfg()).expect("theta order 1"));
        let plain = finite(&sos::lovasz_theta(&g, &cfg()).expect("plain theta SDP"));
        prop_assert!(alpha <= t0 + 1e-6, "alpha {alpha} above theta order 0 {t0}");
        prop_assert!(t1 <= t0 + 1e-6, "order 1 {t1} above order 0 {t0}");
        prop_assert!(t0 <= plain + 1e-6, "order 0 {t0} above plain theta {plain}");
        prop_assert!(plain <= cover + 1e-6, "plain theta {plain} above cover {cover}");
        let derived = b0.derived_alpha_bound.expect("finite bound rounds");
        prop_assert!(derived >= alpha_int as i64, "derived bound {derived} under alpha");
    }

    #[test]
    fn repeated_solves_are_bit_identical(g in graph_strategy(6)) {
        let program = sos::lovasz_theta_program(&g);
        let a = solver::solve(&program, &cfg()).expect("first solve");
        let b = solver::solve(&program, &cfg()).expect("second solve");
        prop_assert_eq!(a.iterations, b.iterations);
        prop_assert_eq!(a.primal_value.to_bits(), b.primal_value.to_bits());
        prop_assert_eq!(a.dual_value.to_bits(), b.dual_value.to_bits());
    }
}
