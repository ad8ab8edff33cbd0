use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::payoff::{chain_values, execution_payoff, Execution};
use super::{bay_exp, iterate_scc, ne_tol, stratify, SolverConfig, SolverError};
use crate::graph::SecModel;
use crate::scenario::{PayoffPair, Scenario};

/// One chosen edge per (type, vertex); `None` exactly where the vertex has no
/// edge of that type.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Strategy {
    /// Indexed `[type][vertex]`, types in model order.
    pub choice: Vec<Vec<Option<usize>>>,
}

/// A strategy edge in serialized form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyEntry {
    pub vertex: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub u: String,
    pub v: String,
    pub target: String,
    pub user_payoff: f64,
    pub defender_payoff: f64,
}

impl Strategy {
    /// The t-execution from `start`: follow the choices until a vertex repeats
    /// or has no choice.
    pub fn execution(&self, ty: usize, start: usize, m: &SecModel) -> Execution {
        let mut seen: Vec<usize> = Vec::new();
        let mut edges = Vec::new();
        let mut v = start;
        loop {
            if let Some(k) = seen.iter().position(|&s| s == v) {
                return Execution { start, edges, cycle_start: Some(k) };
            }
            let Some(e) = self.choice[ty][v] else {
                return Execution { start, edges, cycle_start: None };
            };
            seen.push(v);
            edges.push(e);
            v = m.edges[e].target;
        }
    }

    /// Chosen edges with the payoff of the execution they start.
    pub fn entries(&self, m: &SecModel, cfg: &SolverConfig) -> Vec<StrategyEntry> {
        let mut out = Vec::new();
        for (t, row) in self.choice.iter().enumerate() {
            for (v, e) in row.iter().enumerate() {
                let Some(e) = *e else { continue };
                let edge = &m.edges[e];
                let pf = execution_payoff(m, &self.execution(t, v, m), cfg);
                out.push(StrategyEntry {
                    vertex: m.vertices[v].id.clone(),
                    ty: m.types[t].clone(),
                    u: edge.label.user.clone(),
                    v: edge.label.defender.clone(),
                    target: m.vertices[edge.target].id.clone(),
                    user_payoff: pf.user,
                    defender_payoff: pf.defender,
                });
            }
        }
        out
    }

    /// Resolves serialized entries against `m`. Vertices left without an entry
    /// stay unchosen; the verifier reports them.
    pub fn from_entries(m: &SecModel, entries: &[StrategyEntry]) -> Result<Strategy, SolverError> {
        let mut choice = vec![vec![None; m.vertices.len()]; m.types.len()];
        for en in entries {
            let dangling = || {
                SolverError::DanglingEdge(format!(
                    "{} -> {} type {} act=({},{})",
                    en.vertex, en.target, en.ty, en.u, en.v
                ))
            };
            let src = m.vertex_index(&en.vertex).ok_or_else(dangling)?;
            let tgt = m.vertex_index(&en.target).ok_or_else(dangling)?;
            let t = m.type_index(&en.ty).ok_or_else(dangling)?;
            let e = m
                .out_edges(src, &en.ty)
                .into_iter()
                .find(|&e| {
                    let l = &m.edges[e].label;
                    m.edges[e].target == tgt && l.user == en.u && l.defender == en.v
                })
                .ok_or_else(dangling)?;
            if choice[t][src].replace(e).is_some() {
                return Err(SolverError::DanglingEdge(format!("second entry for {} type {}", en.vertex, en.ty)));
            }
        }
        Ok(Strategy { choice })
    }
}

/// Serialized solver output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NesDocument {
    pub beta: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub strategies: Vec<Vec<StrategyEntry>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NesResult {
    /// The model the strategies refer to, after the Bayesian update.
    pub model: SecModel,
    pub strategies: Vec<Strategy>,
    /// Equilibrium choices of each type on its own, `[type][k][vertex]`;
    /// `strategies` is their product.
    pub by_type: Vec<Vec<Vec<Option<usize>>>>,
    /// Converged `Pp` from value iteration, `[type][vertex]`.
    pub pp: Vec<Vec<PayoffPair>>,
    /// Value-iteration sweeps over all clusters and types.
    pub iterations: usize,
}

impl NesResult {
    pub fn document(&self, cfg: &SolverConfig) -> NesDocument {
        NesDocument {
            beta: cfg.beta,
            epsilon: cfg.epsilon,
            iterations: self.iterations,
            strategies: self.strategies.iter().map(|s| s.entries(&self.model, cfg)).collect(),
        }
    }
}

/// Applies the Bayesian update and returns every equilibrium strategy.
pub fn find_nes(m: &SecModel, sc: &Scenario, cfg: &SolverConfig) -> Result<NesResult, SolverError> {
    solve_nes(&bay_exp(m, sc)?, cfg)
}

/// Every equilibrium strategy of `m`, whose defender weights are already
/// posterior expectations.
///
/// Types never interact, so each is solved on its own and the results are
/// combined by cartesian product. Within a type, clusters are handled sinks
/// first: value iteration gives the user value, which is then made exact by
/// policy iteration; every combination of user-optimal edges is extended over
/// the partial strategies of the solved region and kept when the defender
/// cannot gain by switching `v`.
pub fn solve_nes(m: &SecModel, cfg: &SolverConfig) -> Result<NesResult, SolverError> {
    cfg.validate()?;
    let cond = stratify(m);
    let per_type: Vec<TypeSolution> =
        (0..m.types.len()).into_par_iter().map(|t| solve_type(m, t, &cond.clusters, cfg)).collect::<Result<_, _>>()?;

    let mut strategies: Vec<Vec<Vec<Option<usize>>>> = vec![Vec::new()];
    for sol in &per_type {
        if strategies.len().saturating_mul(sol.choices.len()) > cfg.max_strategies {
            return Err(SolverError::TooManyStrategies { cap: cfg.max_strategies });
        }
        strategies = strategies
            .iter()
            .flat_map(|prefix| {
                sol.choices.iter().map(move |c| {
                    let mut s = prefix.clone();
                    s.push(c.clone());
                    s
                })
            })
            .collect();
    }
    let mut strategies: Vec<Strategy> = strategies.into_iter().map(|choice| Strategy { choice }).collect();
    strategies.sort();
    Ok(NesResult {
        model: m.clone(),
        strategies,
        by_type: per_type.iter().map(|s| s.choices.clone()).collect(),
        pp: per_type.iter().map(|s| s.pp.clone()).collect(),
        iterations: per_type.iter().map(|s| s.iterations).sum(),
    })
}

struct TypeSolution {
    choices: Vec<Vec<Option<usize>>>,
    pp: Vec<PayoffPair>,
    iterations: usize,
}

/// A strategy for one type on the solved region, with its execution payoffs.
#[derive(Clone)]
struct Partial {
    choice: Vec<Option<usize>>,
    value: Vec<PayoffPair>,
}

fn solve_type(
    m: &SecModel,
    t: usize,
    clusters: &[super::Cluster],
    cfg: &SolverConfig,
) -> Result<TypeSolution, SolverError> {
    let ty = m.types[t].as_str();
    let n = m.vertices.len();
    let out: Vec<Vec<usize>> = (0..n).map(|v| m.out_edges(v, ty)).collect();
    let mut pp = vec![PayoffPair::ZERO; n];
    let mut user = vec![0.0; n];
    let mut iterations = 0;
    let mut partials = vec![Partial { choice: vec![None; n], value: vec![PayoffPair::ZERO; n] }];

    for cluster in clusters {
        let active: Vec<usize> = cluster.vertices.iter().copied().filter(|&v| !out[v].is_empty()).collect();
        if active.is_empty() {
            continue;
        }
        if partials.is_empty() {
            break;
        }
        let boundary: Vec<PayoffPair> =
            (0..n).map(|v| PayoffPair::new(user[v], partials[0].value[v].defender)).collect();
        let it = iterate_scc(m, &cluster.vertices, ty, cfg, &boundary, None)?;
        iterations += it.iterations;
        for (i, &v) in cluster.vertices.iter().enumerate() {
            pp[v] = it.pp[i];
        }

        // Policy iteration from the value-iteration choice makes the user value exact.
        let q = |e: usize, val: &[f64]| {
            let l = &m.edges[e].label;
            l.weight.user + cfg.beta * l.tran_p * val[m.edges[e].target]
        };
        let iterated: HashMap<usize, f64> = it.weights.iter().map(|&(e, w)| (e, w.user)).collect();
        let mut policy: Vec<Option<usize>> = vec![None; n];
        for &v in &active {
            policy[v] = Some(argmax(&out[v], |e| iterated[&e]));
        }
        loop {
            let values = evaluate(m, &policy, &active, &boundary, cfg.beta);
            for &v in &active {
                user[v] = values[v].user;
            }
            let mut changed = false;
            for &v in &active {
                let best = argmax(&out[v], |e| q(e, &user));
                if q(best, &user) > user[v] + ne_tol(user[v]) {
                    policy[v] = Some(best);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let optimal: Vec<Vec<usize>> = active
            .iter()
            .map(|&v| out[v].iter().copied().filter(|&e| q(e, &user) >= user[v] - ne_tol(user[v])).collect())
            .collect();

        let mut next = Vec::new();
        for partial in &partials {
            let mut pick = vec![0usize; active.len()];
            loop {
                let mut choice = partial.choice.clone();
                for (i, &v) in active.iter().enumerate() {
                    choice[v] = Some(optimal[i][pick[i]]);
                }
                let value = evaluate(m, &choice, &active, &partial.value, cfg.beta);
                if active.iter().all(|&v| defender_holds(m, &out[v], choice[v].unwrap(), &value, cfg.beta)) {
                    if next.len() >= cfg.max_strategies {
                        return Err(SolverError::TooManyStrategies { cap: cfg.max_strategies });
                    }
                    next.push(Partial { choice, value });
                }
                if !advance(&mut pick, &optimal) {
                    break;
                }
            }
        }
        partials = next;
    }
    Ok(TypeSolution { choices: partials.into_iter().map(|p| p.choice).collect(), pp, iterations })
}

/// First edge attaining the maximum of `f`.
fn argmax(es: &[usize], f: impl Fn(usize) -> f64) -> usize {
    let mut best = es[0];
    for &e in &es[1..] {
        if f(e) > f(best) {
            best = e;
        }
    }
    best
}

/// Odometer step over the product of `sets`; false once it wraps.
fn advance(pick: &mut [usize], sets: &[Vec<usize>]) -> bool {
    for i in (0..pick.len()).rev() {
        pick[i] += 1;
        if pick[i] < sets[i].len() {
            return true;
        }
        pick[i] = 0;
    }
    false
}

/// Payoffs of following `choice` from each of `vertices`; every other vertex
/// takes its value from `known`.
fn evaluate(
    m: &SecModel,
    choice: &[Option<usize>],
    vertices: &[usize],
    known: &[PayoffPair],
    beta: f64,
) -> Vec<PayoffPair> {
    let mut value = known.to_vec();
    let mut done = vec![true; m.vertices.len()];
    for &v in vertices {
        done[v] = false;
    }
    for &start in vertices {
        if done[start] {
            continue;
        }
        let mut path: Vec<usize> = Vec::new();
        let mut v = start;
        let (cycle_start, end) = loop {
            if done[v] {
                break (None, value[v]);
            }
            if let Some(k) = path.iter().position(|&p| p == v) {
                break (Some(k), PayoffPair::ZERO);
            }
            match choice[v] {
                Some(e) => {
                    path.push(v);
                    v = m.edges[e].target;
                }
                None => break (None, PayoffPair::ZERO),
            }
        };
        let steps: Vec<(PayoffPair, f64)> = path
            .iter()
            .map(|&p| {
                let l = &m.edges[choice[p].expect("chosen")].label;
                (l.weight, l.tran_p)
            })
            .collect();
        for (&p, val) in path.iter().zip(chain_values(&steps, cycle_start, beta, end)) {
            value[p] = val;
            done[p] = true;
        }
    }
    value
}

/// The defender gains nothing by answering the chosen user action differently.
fn defender_holds(m: &SecModel, out: &[usize], chosen: usize, value: &[PayoffPair], beta: f64) -> bool {
    let q = |e: usize| {
        let l = &m.edges[e].label;
        l.weight.defender + beta * l.tran_p * value[m.edges[e].target].defender
    };
    let here = q(chosen);
    let u = &m.edges[chosen].label.user;
    out.iter().filter(|&&e| &m.edges[e].label.user == u).all(|&e| q(e) <= here + ne_tol(here))
}

/// Every spanning strategy; errors once more than `cap` would be produced.
pub fn enumerate_strategies(m: &SecModel, cap: usize) -> Result<Vec<Strategy>, SolverError> {
    let sets: Vec<Vec<Option<usize>>> = m
        .types
        .iter()
        .flat_map(|ty| {
            (0..m.vertices.len()).map(move |v| {
                let es = m.out_edges(v, ty);
                if es.is_empty() {
                    vec![None]
                } else {
                    es.into_iter().map(Some).collect()
                }
            })
        })
        .collect();
    let total = sets.iter().try_fold(1usize, |acc, s| acc.checked_mul(s.len()).filter(|&x| x <= cap));
    if total.is_none() {
        return Err(SolverError::TooManyStrategies { cap });
    }
    let n = m.vertices.len();
    let lens: Vec<Vec<usize>> = sets.iter().map(|s| (0..s.len()).collect()).collect();
    let mut pick = vec![0usize; sets.len()];
    let mut out = Vec::new();
    loop {
        let flat: Vec<Option<usize>> = pick.iter().zip(&sets).map(|(&i, s)| s[i]).collect();
        out.push(Strategy { choice: flat.chunks(n.max(1)).map(<[_]>::to_vec).collect() });
        if !advance(&mut pick, &lens) {
            break;
        }
    }
    if n == 0 {
        for s in &mut out {
            s.choice = vec![Vec::new(); m.types.len()];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeLabel, SecEdge, Vertex};

    fn edge(source: usize, target: usize, ty: &str, uv: (&str, &str), w: (f64, f64)) -> SecEdge {
        SecEdge {
            source,
            target,
            label: EdgeLabel {
                ty: ty.into(),
                type_prob: 1.0,
                user: uv.0.into(),
                defender: uv.1.into(),
                tran_p: 1.0,
                weight: PayoffPair::new(w.0, w.1),
            },
        }
    }

    fn model(n: usize, types: &[&str], edges: Vec<SecEdge>) -> SecModel {
        SecModel {
            vertices: (0..n).map(|i| Vertex::single(format!("v{i}"))).collect(),
            types: types.iter().map(|t| t.to_string()).collect(),
            edges,
        }
    }

    #[test]
    fn enumeration_counts() {
        let m = model(1, &["t"], (0..3).map(|i| edge(0, 0, "t", ("u", &i.to_string()), (0.0, 0.0))).collect());
        assert_eq!(enumerate_strategies(&m, 100).unwrap().len(), 3);
        let mut es: Vec<SecEdge> = (0..2).map(|i| edge(0, 1, "t", ("u", &i.to_string()), (0.0, 0.0))).collect();
        es.extend((0..3).map(|i| edge(1, 0, "t", ("u", &i.to_string()), (0.0, 0.0))));
        assert_eq!(enumerate_strategies(&model(2, &["t"], es), 100).unwrap().len(), 6);
        let es: Vec<SecEdge> =
            (0..7).flat_map(|v| (0..2).map(move |i| edge(v, v, "t", ("u", &i.to_string()), (0.0, 0.0)))).collect();
        assert_eq!(
            enumerate_strategies(&model(7, &["t"], es), 100).unwrap_err(),
            SolverError::TooManyStrategies { cap: 100 }
        );
    }

    #[test]
    fn single_choice_gives_one_strategy() {
        let m = model(
            2,
            &["a", "b"],
            vec![
                edge(0, 1, "a", ("u", "v"), (1.0, -1.0)),
                edge(1, 0, "a", ("u", "v"), (2.0, -2.0)),
                edge(0, 0, "b", ("u", "v"), (3.0, -3.0)),
            ],
        );
        let r = solve_nes(&m, &SolverConfig::default()).unwrap();
        assert_eq!(r.strategies.len(), 1);
        assert_eq!(r.strategies[0].choice, vec![vec![Some(0), Some(1)], vec![Some(2), None]]);
    }

    #[test]
    fn user_takes_the_better_action_and_defender_its_best_reply() {
        let m = model(
            1,
            &["t"],
            vec![
                edge(0, 0, "t", ("a", "x"), (5.0, -5.0)),
                edge(0, 0, "t", ("a", "y"), (3.0, -3.0)),
                edge(0, 0, "t", ("b", "x"), (1.0, -1.0)),
            ],
        );
        let r = solve_nes(&m, &SolverConfig::default()).unwrap();
        // Only the user-optimal edge (a,x) is a candidate, and the defender prefers (a,y).
        assert!(r.strategies.is_empty());
        let m =
            model(1, &["t"], vec![edge(0, 0, "t", ("a", "x"), (5.0, -3.0)), edge(0, 0, "t", ("a", "y"), (3.0, -5.0))]);
        let r = solve_nes(&m, &SolverConfig::default()).unwrap();
        assert_eq!(r.strategies, vec![Strategy { choice: vec![vec![Some(0)]] }]);
    }

    #[test]
    fn ties_are_all_kept() {
        let m =
            model(1, &["t"], vec![edge(0, 0, "t", ("a", "x"), (1.0, 0.0)), edge(0, 0, "t", ("b", "x"), (1.0, 0.0))]);
        assert_eq!(solve_nes(&m, &SolverConfig::default()).unwrap().strategies.len(), 2);
    }

    #[test]
    fn entries_round_trip() {
        let m =
            model(2, &["t"], vec![edge(0, 1, "t", ("u", "v"), (2.0, 0.0)), edge(1, 1, "t", ("u", "v"), (10.0, -1.0))]);
        let cfg = SolverConfig { beta: 0.5, ..SolverConfig::default() };
        let r = solve_nes(&m, &cfg).unwrap();
        let entries = r.strategies[0].entries(&m, &cfg);
        assert!((entries[0].user_payoff - 12.0).abs() < 1e-12);
        assert_eq!(Strategy::from_entries(&m, &entries).unwrap(), r.strategies[0]);
        let mut bad = entries.clone();
        bad[0].target = "v0".into();
        assert!(matches!(Strategy::from_entries(&m, &bad), Err(SolverError::DanglingEdge(_))));
    }
}
