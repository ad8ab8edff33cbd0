use std::collections::HashMap;

use super::{ne_tol, SolverConfig, SolverError};
use crate::graph::SecModel;
use crate::scenario::PayoffPair;

/// Fixed point of the weight iteration on one cluster for one type.
#[derive(Clone, Debug, PartialEq)]
pub struct IterOutcome {
    /// `Pp^t` per cluster vertex, in cluster order.
    pub pp: Vec<PayoffPair>,
    /// Final `L_n(e)` for every type-t edge leaving the cluster's vertices.
    pub weights: Vec<(usize, PayoffPair)>,
    /// Edges meeting both equilibrium conditions under the final weights, per
    /// cluster vertex.
    pub nee: Vec<Vec<usize>>,
    pub iterations: usize,
    /// `Δ_k = max_e |L_k(e) − L_{k−1}(e)|`, starting at `k = 1`.
    pub deltas: Vec<f64>,
}

/// Repeats `L_n(e) = L_0(e) + β·p(e)·Pp_{n−1}(target)` and the equilibrium
/// selection until the weights are within `ε` of the fixed point.
///
/// The user coordinate contracts by `β`, so once the largest change `Δ_n`
/// satisfies `Δ_n·β/(1−β) < ε` no later iterate moves farther than `ε`.
///
/// `boundary[v]` is the solved value of every vertex outside the cluster.
/// `init` gives `L_0` indexed by edge id; without it `L_0` is the edge weight.
/// `Pp_0` is selected from `L_0`. Cluster vertices without type-t edges keep value zero.
pub fn iterate_scc(
    m: &SecModel,
    cluster: &[usize],
    ty: &str,
    cfg: &SolverConfig,
    boundary: &[PayoffPair],
    init: Option<&[PayoffPair]>,
) -> Result<IterOutcome, SolverError> {
    cfg.validate()?;
    let pos = |v: usize| cluster.iter().position(|&c| c == v);
    // Per edge: (index, base weight, discount β·p, target slot in the cluster or its boundary value).
    let mut edges: Vec<EdgeRow> = Vec::new();
    // Per cluster vertex: positions in `edges`.
    let mut out: Vec<Vec<usize>> = Vec::with_capacity(cluster.len());
    for &v in cluster {
        let mut ks = Vec::new();
        for e in m.out_edges(v, ty) {
            let edge = &m.edges[e];
            let target = pos(edge.target).ok_or(boundary[edge.target]);
            ks.push(edges.len());
            edges.push((e, edge.label.weight, cfg.beta * edge.label.tran_p, target));
        }
        out.push(ks);
    }
    // User action of each edge as a small integer, numbered per vertex.
    let mut users = vec![0usize; edges.len()];
    for ks in &out {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        for &k in ks {
            let next = ids.len();
            users[k] = *ids.entry(m.edges[edges[k].0].label.user.as_str()).or_insert(next);
        }
    }
    let mut weights: Vec<PayoffPair> = match init {
        Some(l0) => edges.iter().map(|&(e, ..)| l0[e]).collect(),
        None => edges.iter().map(|&(_, w, _, _)| w).collect(),
    };
    let mut pp = select(&out, &users, &weights);
    let stop = cfg.epsilon * (1.0 - cfg.beta) / cfg.beta;
    let mut deltas = Vec::new();
    for n in 1..=cfg.max_iters {
        let mut delta: f64 = 0.0;
        for (k, &(_, base, disc, target)) in edges.iter().enumerate() {
            let next = match target {
                Ok(slot) => pp[slot],
                Err(fixed) => fixed,
            };
            let w = PayoffPair::new(base.user + disc * next.user, base.defender + disc * next.defender);
            delta = delta.max((w.user - weights[k].user).abs()).max((w.defender - weights[k].defender).abs());
            weights[k] = w;
        }
        deltas.push(delta);
        pp = select(&out, &users, &weights);
        if delta < stop {
            let nee = out
                .iter()
                .map(|ks| nee_edges(ks, &users, &weights).into_iter().map(|k| edges[k].0).collect())
                .collect();
            let weights = edges.iter().zip(weights).map(|(&(e, ..), w)| (e, w)).collect();
            return Ok(IterOutcome { pp, weights, nee, iterations: n, deltas });
        }
    }
    Err(SolverError::NonConvergence {
        ty: ty.to_string(),
        cluster: cluster.iter().map(|&v| m.vertices[v].id.clone()).collect(),
        iterations: cfg.max_iters,
        delta: deltas.last().copied().unwrap_or(f64::NAN),
    })
}

type EdgeRow = (usize, PayoffPair, f64, Result<usize, PayoffPair>);

/// `Pp` per vertex: the user-maximal weight, with the defender coordinate
/// taken from the first maximizer that is also defender-optimal among edges
/// with its user action, or else the first maximizer.
fn select(out: &[Vec<usize>], users: &[usize], weights: &[PayoffPair]) -> Vec<PayoffPair> {
    out.iter()
        .map(|ks| {
            let Some(best) = ks.iter().map(|&k| weights[k].user).reduce(f64::max) else {
                return PayoffPair::ZERO;
            };
            let tol = 1e-12 * (1.0 + best.abs());
            let first = ks.iter().copied().find(|&k| weights[k].user >= best - tol).expect("a maximizer");
            let pick = nee_edges(ks, users, weights).first().copied().unwrap_or(first);
            PayoffPair::new(best, weights[pick].defender)
        })
        .collect()
}

/// Positions that are user-maximal over the vertex and defender-maximal over
/// the positions sharing their user action, each within [`ne_tol`].
fn nee_edges(ks: &[usize], users: &[usize], weights: &[PayoffPair]) -> Vec<usize> {
    let Some(best) = ks.iter().map(|&k| weights[k].user).reduce(f64::max) else {
        return Vec::new();
    };
    let groups = ks.iter().map(|&k| users[k] + 1).max().unwrap_or(0);
    let mut best_d = vec![f64::NEG_INFINITY; groups];
    for &k in ks {
        best_d[users[k]] = best_d[users[k]].max(weights[k].defender);
    }
    ks.iter()
        .copied()
        .filter(|&k| weights[k].user >= best - ne_tol(best))
        .filter(|&k| {
            let d = best_d[users[k]];
            weights[k].defender >= d - ne_tol(d)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeLabel, SecEdge, Vertex};

    fn edge(source: usize, target: usize, user: &str, w: (f64, f64), p: f64) -> SecEdge {
        SecEdge {
            source,
            target,
            label: EdgeLabel {
                ty: "t".into(),
                type_prob: 1.0,
                user: user.into(),
                defender: format!("d{}", w.1),
                tran_p: p,
                weight: PayoffPair::new(w.0, w.1),
            },
        }
    }

    fn model(n: usize, edges: Vec<SecEdge>) -> SecModel {
        SecModel { vertices: (0..n).map(|i| Vertex::single(format!("v{i}"))).collect(), types: vec!["t".into()], edges }
    }

    fn cfg(beta: f64) -> SolverConfig {
        SolverConfig { beta, epsilon: 1e-10, ..SolverConfig::default() }
    }

    #[test]
    fn self_loop_geometric_series() {
        let m = model(1, vec![edge(0, 0, "u", (10.0, -10.0), 1.0)]);
        let r = iterate_scc(&m, &[0], "t", &cfg(0.9), &[PayoffPair::ZERO], None).unwrap();
        assert!((r.pp[0].user - 100.0).abs() < 1e-8);
        assert!((r.pp[0].defender + 100.0).abs() < 1e-8);
    }

    #[test]
    fn default_stop_is_within_epsilon_of_the_fixed_point() {
        let m = model(1, vec![edge(0, 0, "u", (7.0, -7.0), 0.8)]);
        let c = SolverConfig::default();
        let r = iterate_scc(&m, &[0], "t", &c, &[PayoffPair::ZERO], None).unwrap();
        assert!((r.pp[0].user - 7.0 / (1.0 - 0.72)).abs() < c.epsilon);
    }

    #[test]
    fn defender_prefers_the_smaller_loss() {
        let m = model(1, vec![edge(0, 0, "u", (1.0, -1.0), 1.0), edge(0, 0, "u", (1.0, -5.0), 1.0)]);
        let r = iterate_scc(&m, &[0], "t", &cfg(0.5), &[PayoffPair::ZERO], None).unwrap();
        assert_eq!(r.nee, vec![vec![0]]);
        assert!((r.pp[0].defender + 2.0).abs() < 1e-8);
    }

    #[test]
    fn boundary_values_enter_through_exits() {
        // v0 -> v1 leaves the cluster {0}; v1 is worth (4, 0).
        let m = model(2, vec![edge(0, 1, "u", (1.0, 0.0), 1.0), edge(0, 0, "w", (0.0, 0.0), 1.0)]);
        let boundary = [PayoffPair::ZERO, PayoffPair::new(4.0, 0.0)];
        let r = iterate_scc(&m, &[0], "t", &cfg(0.5), &boundary, None).unwrap();
        assert!((r.pp[0].user - 3.0).abs() < 1e-8);
        assert_eq!(r.nee, vec![vec![0]]);
    }

    #[test]
    fn vertex_without_edges_is_worth_zero() {
        let m = model(2, vec![edge(1, 1, "u", (1.0, 1.0), 1.0)]);
        let r = iterate_scc(&m, &[0], "t", &cfg(0.5), &[PayoffPair::ZERO; 2], None).unwrap();
        assert_eq!((r.pp[0], r.iterations), (PayoffPair::ZERO, 1));
    }

    #[test]
    fn reports_non_convergence() {
        let m = model(1, vec![edge(0, 0, "u", (1.0, 0.0), 1.0)]);
        let c = SolverConfig { beta: 0.99, epsilon: 1e-12, max_iters: 5, ..SolverConfig::default() };
        let err = iterate_scc(&m, &[0], "t", &c, &[PayoffPair::ZERO], None).unwrap_err();
        assert!(matches!(err, SolverError::NonConvergence { iterations: 5, .. }));
    }

    #[test]
    fn deltas_contract() {
        let m = model(
            2,
            vec![
                edge(0, 1, "u", (3.0, -3.0), 1.0),
                edge(0, 0, "w", (1.0, -1.0), 0.5),
                edge(1, 0, "u", (-2.0, 2.0), 1.0),
            ],
        );
        let r = iterate_scc(&m, &[0, 1], "t", &cfg(0.9), &[PayoffPair::ZERO; 2], None).unwrap();
        for k in 1..r.deltas.len() {
            assert!(r.deltas[k] <= 0.9 * r.deltas[k - 1] + 1e-9);
        }
    }
}
