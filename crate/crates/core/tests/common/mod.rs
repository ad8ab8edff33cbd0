//! Random SecModel fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use pvccs::graph::{EdgeLabel, SecEdge, SecModel, Vertex};
use pvccs::scenario::PayoffPair;
use pvccs::solver::{enumerate_strategies, verify_nes, SolverConfig, Strategy};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const USER_ACTIONS: [&str; 2] = ["a", "b"];
pub const DEFENDER_ACTIONS: [&str; 2] = ["x", "y"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn label(rng: &mut ChaCha8Rng, ty: &str, type_prob: f64, w: PayoffPair) -> EdgeLabel {
    EdgeLabel {
        ty: ty.into(),
        type_prob,
        user: USER_ACTIONS[rng.gen_range(0..2)].into(),
        defender: DEFENDER_ACTIONS[rng.gen_range(0..2)].into(),
        // (0,1]
        tran_p: 1.0 - rng.gen::<f64>(),
        weight: w,
    }
}

fn payoff(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-10.0..=10.0)
}

/// Up to 5 vertices, up to 2 types, up to 3 out-edges per (vertex, type),
/// independent payoffs in [−10, 10].
pub fn random_model(rng: &mut ChaCha8Rng) -> SecModel {
    let n = rng.gen_range(1..=5);
    let types: Vec<String> = (0..rng.gen_range(1..=2)).map(|t| format!("t{t}")).collect();
    let mut edges = Vec::new();
    for ty in &types {
        for v in 0..n {
            for _ in 0..rng.gen_range(0..=3) {
                let w = PayoffPair::new(payoff(rng), payoff(rng));
                let l = label(rng, ty, 1.0 / types.len() as f64, w);
                edges.push(SecEdge { source: v, target: rng.gen_range(0..n), label: l });
            }
        }
    }
    model(n, types, edges)
}

/// Three vertices on the cycle 0 → 1 → 2 → 0 plus up to two random extra
/// edges per vertex, one type.
pub fn random_scc3(rng: &mut ChaCha8Rng) -> SecModel {
    let mut edges = Vec::new();
    for v in 0..3 {
        let mut targets = vec![(v + 1) % 3];
        for _ in 0..rng.gen_range(0..=2) {
            targets.push(rng.gen_range(0..3));
        }
        for target in targets {
            let w = PayoffPair::new(payoff(rng), payoff(rng));
            let l = label(rng, "t", 1.0, w);
            edges.push(SecEdge { source: v, target, label: l });
        }
    }
    model(3, vec!["t".into()], edges)
}

/// One type, every vertex with 1 to 3 edges, defender weight `−a·` user
/// weight for a common `a > 0`. Returns the model and `a`.
pub fn random_antitone(rng: &mut ChaCha8Rng) -> (SecModel, f64) {
    let n = rng.gen_range(1..=5);
    let a = rng.gen_range(0.1..=3.0);
    let mut edges = Vec::new();
    for v in 0..n {
        for _ in 0..rng.gen_range(1..=3) {
            let wu = payoff(rng);
            let l = label(rng, "t", 1.0, PayoffPair::new(wu, -a * wu));
            edges.push(SecEdge { source: v, target: rng.gen_range(0..n), label: l });
        }
    }
    (model(n, vec!["t".into()], edges), a)
}

pub fn model(n: usize, types: Vec<String>, edges: Vec<SecEdge>) -> SecModel {
    SecModel { vertices: (0..n).map(|i| Vertex::single(format!("v{i}"))).collect(), types, edges }
}

/// Every spanning strategy the verifier accepts.
pub fn brute_force(m: &SecModel, cfg: &SolverConfig) -> BTreeSet<Strategy> {
    enumerate_strategies(m, cfg.max_strategies)
        .expect("enumeration within cap")
        .into_iter()
        .filter(|s| verify_nes(m, s, cfg).is_pass())
        .collect()
}

pub fn search_config() -> SolverConfig {
    SolverConfig { max_strategies: 1_000_000, ..SolverConfig::default() }
}
