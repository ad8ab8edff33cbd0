mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use pvccs::cases::{campus_scenario, ddos_params, grid_points, DdosBeliefs};
use pvccs::graph::{compile, CompileOptions};
use pvccs::scenario::PayoffPair;
use pvccs::solver::{execution_payoff, iterate_scc, ne_tol, posterior, solve_nes, verify_nes, SolverConfig};
use rand::Rng;

use common::{brute_force, random_antitone, random_model, random_scc3, rng, search_config};

#[test]
fn search_matches_brute_force_on_random_models() {
    let cfg = search_config();
    let mut nonempty = 0;
    for seed in 0..250 {
        let m = random_model(&mut rng(seed));
        let found: BTreeSet<_> = solve_nes(&m, &cfg).unwrap().strategies.into_iter().collect();
        let expected = brute_force(&m, &cfg);
        assert_eq!(found, expected, "seed {seed}");
        nonempty += usize::from(!expected.is_empty());
    }
    // The oracle must not be vacuous.
    assert!(nonempty > 50, "only {nonempty} models have an equilibrium");
}

#[test]
fn returned_strategies_all_verify() {
    let cfg = search_config();
    for seed in 1000..1100 {
        let m = random_model(&mut rng(seed));
        for s in solve_nes(&m, &cfg).unwrap().strategies {
            assert!(verify_nes(&m, &s, &cfg).is_pass(), "seed {seed}");
        }
    }
}

#[test]
fn user_values_are_fixed_points() {
    let cfg = search_config();
    for seed in 2000..2100 {
        let m = random_model(&mut rng(seed));
        let r = solve_nes(&m, &cfg).unwrap();
        for s in &r.strategies {
            for t in 0..m.types.len() {
                for v in 0..m.vertices.len() {
                    let exact = execution_payoff(&m, &s.execution(t, v, &m), &cfg).user;
                    let pp = r.pp[t][v].user;
                    assert!((exact - pp).abs() <= 10.0 * cfg.epsilon, "seed {seed}: {exact} vs {pp}");
                }
            }
        }
    }
}

/// Checks `Δ_{k+1} ≤ 0.9·Δ_k + 1e-9` from `k = 1` on.
fn contracts(deltas: &[f64]) -> bool {
    deltas.windows(2).all(|w| w[1] <= 0.9 * w[0] + 1e-9)
}

#[test]
fn iteration_contracts_on_antitone_fixtures() {
    let cfg = SolverConfig::default();
    for seed in 0..80 {
        let mut r = rng(3000 + seed);
        let (m, a) = random_antitone(&mut r);
        let all: Vec<usize> = (0..m.vertices.len()).collect();
        let boundary = vec![PayoffPair::ZERO; all.len()];
        let first = iterate_scc(&m, &all, "t", &cfg, &boundary, None).unwrap();
        let init: Vec<PayoffPair> = m
            .edges
            .iter()
            .map(|_| {
                let c: f64 = r.gen_range(-50.0..50.0);
                PayoffPair::new(c, -a * c)
            })
            .collect();
        let second = iterate_scc(&m, &all, "t", &cfg, &boundary, Some(&init)).unwrap();
        assert!(contracts(&first.deltas), "seed {seed}: {:?}", first.deltas);
        assert!(contracts(&second.deltas), "seed {seed}: {:?}", second.deltas);
        for ((e1, w1), (e2, w2)) in first.weights.iter().zip(&second.weights) {
            assert_eq!(e1, e2);
            assert!((w1.user - w2.user).abs() <= 10.0 * cfg.epsilon, "seed {seed}");
            assert!((w1.defender - w2.defender).abs() <= 10.0 * cfg.epsilon * (1.0 + a), "seed {seed}");
        }
    }
}

#[test]
fn campus_posteriors_are_normalized() {
    let sc = campus_scenario();
    let c = compile(&sc, CompileOptions::default()).unwrap();
    for e in &c.model.edges {
        let s = &c.model.vertices[e.source].id;
        let total: f64 = posterior(&sc, s, &e.label.user).unwrap().iter().map(|(_, d)| d).sum();
        assert!((total - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn ddos_posteriors_are_normalized() {
    let p = ddos_params();
    let b = DdosBeliefs::new(&p);
    let points = grid_points(&p).unwrap();
    let mut seen = BTreeSet::new();
    for pt in points.iter().filter(|pt| pt.mp == 0.0) {
        let u = pvccs::cases::user_action(pt.m_u, pt.r_u);
        if seen.insert(u.clone()) {
            let total: f64 = posterior(&b, "s1", &u).unwrap().iter().map(|(_, d)| d).sum();
            assert!((total - 1.0).abs() <= 1e-9, "{u}");
        }
    }
    assert!(!seen.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn strongly_connected_triples_match_brute_force(seed in any::<u64>()) {
        let cfg = search_config();
        let m = random_scc3(&mut rng(seed));
        let found: BTreeSet<_> = solve_nes(&m, &cfg).unwrap().strategies.into_iter().collect();
        prop_assert_eq!(found, brute_force(&m, &cfg));
    }

    #[test]
    fn tolerance_grows_with_magnitude(x in -1e6f64..1e6) {
        prop_assert!(ne_tol(x) >= 1e-9);
        prop_assert!(ne_tol(x) >= 1e-9 * x.abs());
    }
}
