//! Coarsest probabilistic bisimulation by splitter-based partition refinement.

use std::collections::{BTreeMap, HashMap};

use super::lts::{Lts, LtsEdge};

/// Two masses closer than this are treated as equal.
pub const BISIM_TOLERANCE: f64 = 1e-9;

/// The quotient of an LTS by probabilistic bisimilarity.
#[derive(Clone, Debug)]
pub struct Quotient {
    /// One node per class, represented by the class's smallest member.
    pub lts: Lts,
    /// `class_of[node]` is the quotient node of an original node.
    pub class_of: Vec<usize>,
    /// Members of each class in increasing order.
    pub classes: Vec<Vec<usize>>,
}

pub fn minimize(lts: &Lts) -> Quotient {
    minimize_with(lts, &vec![0; lts.len()])
}

/// Refines the partition given by `initial` (a label per node) to the coarsest
/// probabilistic bisimulation contained in it.
pub fn minimize_with(lts: &Lts, initial: &[usize]) -> Quotient {
    let n = lts.len();
    assert_eq!(initial.len(), n, "one initial label per node");

    let mut action_ids: HashMap<String, usize> = HashMap::new();
    let edge_action: Vec<usize> = lts
        .edges()
        .iter()
        .map(|e| {
            let next = action_ids.len();
            *action_ids.entry(e.action.to_string()).or_insert(next)
        })
        .collect();
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, e) in lts.edges().iter().enumerate() {
        incoming[e.target].push(i);
    }

    // Blocks in order of first appearance of their initial label.
    let mut label_block: BTreeMap<usize, usize> = BTreeMap::new();
    let mut block_of = vec![0usize; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for (node, &label) in initial.iter().enumerate() {
        let b = *label_block.entry(label).or_insert_with(|| {
            blocks.push(Vec::new());
            blocks.len() - 1
        });
        blocks[b].push(node);
        block_of[node] = b;
    }

    let mut worklist: Vec<usize> = (0..blocks.len()).collect();
    let mut queued = vec![true; blocks.len()];
    while let Some(splitter) = worklist.pop() {
        queued[splitter] = false;
        // μ(node, α, splitter) for every node with an edge into the splitter.
        let mut mass: BTreeMap<usize, HashMap<usize, f64>> = BTreeMap::new();
        for &target in &blocks[splitter] {
            for &ei in &incoming[target] {
                let e: &LtsEdge = &lts.edges()[ei];
                *mass.entry(edge_action[ei]).or_default().entry(e.source).or_default() += e.prob;
            }
        }
        for per_node in mass.values() {
            let mut touched: Vec<usize> = per_node.keys().map(|&v| block_of[v]).collect();
            touched.sort_unstable();
            touched.dedup();
            for b in touched {
                let parts = split_block(&blocks[b], per_node);
                if parts.len() <= 1 {
                    continue;
                }
                let mut parts = parts.into_iter();
                blocks[b] = parts.next().expect("at least two parts");
                if !queued[b] {
                    queued[b] = true;
                    worklist.push(b);
                }
                for part in parts {
                    let id = blocks.len();
                    for &v in &part {
                        block_of[v] = id;
                    }
                    blocks.push(part);
                    queued.push(true);
                    worklist.push(id);
                }
            }
        }
    }

    build_quotient(lts, blocks)
}

/// Groups a block's nodes by mass; values within the tolerance of a group's
/// smallest value join that group.
fn split_block(block: &[usize], mass: &HashMap<usize, f64>) -> Vec<Vec<usize>> {
    let mut valued: Vec<(f64, usize)> = block.iter().map(|&v| (mass.get(&v).copied().unwrap_or(0.0), v)).collect();
    valued.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut parts: Vec<Vec<usize>> = Vec::new();
    let mut start = f64::NEG_INFINITY;
    for (m, v) in valued {
        if parts.is_empty() || m - start > BISIM_TOLERANCE {
            parts.push(Vec::new());
            start = m;
        }
        parts.last_mut().expect("nonempty").push(v);
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    parts
}

fn build_quotient(lts: &Lts, mut blocks: Vec<Vec<usize>>) -> Quotient {
    for b in &mut blocks {
        b.sort_unstable();
    }
    blocks.retain(|b| !b.is_empty());
    blocks.sort_by_key(|b| b[0]);
    let mut class_of = vec![0; lts.len()];
    for (c, b) in blocks.iter().enumerate() {
        for &v in b {
            class_of[v] = c;
        }
    }
    let nodes = blocks.iter().map(|b| lts.node(b[0]).clone()).collect();
    let mut edges = Vec::new();
    for (c, b) in blocks.iter().enumerate() {
        let mut agg: Vec<LtsEdge> = Vec::new();
        for e in lts.outgoing(b[0]) {
            let target = class_of[e.target];
            match agg.iter_mut().find(|x| x.action == e.action && x.target == target) {
                Some(x) => x.prob += e.prob,
                None => agg.push(LtsEdge { source: c, action: e.action.clone(), prob: e.prob, target }),
            }
        }
        edges.extend(agg);
    }
    let mut roots: Vec<usize> = Vec::new();
    for &r in lts.roots() {
        if !roots.contains(&class_of[r]) {
            roots.push(class_of[r]);
        }
    }
    Quotient { lts: Lts::from_parts(nodes, edges, roots), class_of, classes: blocks }
}

/// `E ∼ F`.
pub fn is_bisimilar(lts: &Lts, e: usize, f: usize) -> bool {
    let q = minimize(lts);
    q.class_of[e] == q.class_of[f]
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::calculus::{Action, DefEnv, ProcessExpr, Value, ValueExpr};
    use crate::graph::{build_lts, mu};

    fn a(v: i64) -> Action {
        Action::output("a", Value::Int(v))
    }

    fn edge(source: usize, action: Action, prob: f64, target: usize) -> LtsEdge {
        LtsEdge { source, action, prob, target }
    }

    #[test]
    fn identical_self_loops_are_bisimilar() {
        let mut env = DefEnv::new();
        for name in ["A", "B"] {
            env.define(name, vec![], ProcessExpr::output("a", ValueExpr::int(1), ProcessExpr::call(name, vec![])))
                .unwrap();
        }
        let lts = build_lts(&[ProcessExpr::call("A", vec![]), ProcessExpr::call("B", vec![])], &env, 10).unwrap();
        assert_eq!(lts.len(), 2);
        assert!(is_bisimilar(&lts, 0, 1));
        assert_eq!(minimize(&lts).classes.len(), 1);
    }

    #[test]
    fn different_masses_are_distinguished() {
        // 0 and 1 both emit a!1 into {2}, with masses 0.5 and 0.4; the rest is b!1.
        let b = Action::output("b", Value::Int(1));
        let lts = Lts::from_edges(
            3,
            vec![edge(0, a(1), 0.5, 2), edge(0, b.clone(), 0.5, 2), edge(1, a(1), 0.4, 2), edge(1, b, 0.6, 2)],
            vec![0, 1],
        );
        assert!(!is_bisimilar(&lts, 0, 1));
    }

    #[test]
    fn nil_and_prefix_differ() {
        let lts = Lts::from_edges(2, vec![edge(1, a(1), 1.0, 0)], vec![0, 1]);
        assert!(is_bisimilar(&lts, 0, 0));
        assert!(!is_bisimilar(&lts, 0, 1));
    }

    #[test]
    fn mass_split_over_equivalent_targets_matches_whole() {
        // 0 --a[0.5]--> 2, 0 --a[0.5]--> 3, 1 --a[1]--> 4, with 2,3,4 all dead.
        let lts =
            Lts::from_edges(5, vec![edge(0, a(1), 0.5, 2), edge(0, a(1), 0.5, 3), edge(1, a(1), 1.0, 4)], vec![0, 1]);
        let q = minimize(&lts);
        assert_eq!(q.classes, vec![vec![0, 1], vec![2, 3, 4]]);
        let target = BTreeSet::from([1]);
        assert!((mu(&q.lts, 0, &a(1), &target) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn initial_partition_is_respected() {
        let lts = Lts::from_edges(2, vec![], vec![0, 1]);
        assert_eq!(minimize(&lts).classes.len(), 1);
        assert_eq!(minimize_with(&lts, &[0, 1]).classes.len(), 2);
    }

    #[test]
    fn cyclic_graph_terminates() {
        let lts =
            Lts::from_edges(3, vec![edge(0, a(1), 1.0, 1), edge(1, a(1), 1.0, 2), edge(2, a(1), 1.0, 0)], vec![0]);
        assert_eq!(minimize(&lts).classes.len(), 1);
    }
}
