use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use super::GraphError;
use crate::calculus::{derive_transitions, normalize, Action, DefEnv, ProcessExpr};
use crate::numfmt::sig;

#[derive(Clone, Debug, PartialEq)]
pub struct LtsEdge {
    pub source: usize,
    pub action: Action,
    pub prob: f64,
    pub target: usize,
}

/// A finite generative probabilistic transition system over process terms.
///
/// Node ids are dense indices in discovery order; `outgoing(i)` lists edges in
/// the order `derive_transitions` produced them.
#[derive(Clone, Debug, Default)]
pub struct Lts {
    nodes: Vec<ProcessExpr>,
    index: HashMap<String, usize>,
    edges: Vec<LtsEdge>,
    out: Vec<Vec<usize>>,
    roots: Vec<usize>,
}

impl Lts {
    /// An LTS with the given node terms and edges. Terms must be pairwise
    /// distinct as text.
    pub fn from_parts(nodes: Vec<ProcessExpr>, edges: Vec<LtsEdge>, roots: Vec<usize>) -> Self {
        let mut lts = Lts::default();
        for n in nodes {
            lts.add_node(n);
        }
        for e in edges {
            lts.add_edge(e);
        }
        lts.roots = roots;
        lts
    }

    /// An LTS whose `n` nodes are the placeholder constants `q0, q1, …`.
    pub fn from_edges(n: usize, edges: Vec<LtsEdge>, roots: Vec<usize>) -> Self {
        let nodes = (0..n).map(|i| ProcessExpr::call(format!("q{i}"), vec![])).collect();
        Lts::from_parts(nodes, edges, roots)
    }

    fn add_node(&mut self, term: ProcessExpr) -> usize {
        let key = term.to_string();
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.nodes.len();
        self.nodes.push(term);
        self.index.insert(key, i);
        self.out.push(Vec::new());
        i
    }

    fn add_edge(&mut self, e: LtsEdge) {
        self.out[e.source].push(self.edges.len());
        self.edges.push(e);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &ProcessExpr {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[ProcessExpr] {
        &self.nodes
    }

    pub fn edges(&self) -> &[LtsEdge] {
        &self.edges
    }

    pub fn outgoing(&self, i: usize) -> impl Iterator<Item = &LtsEdge> {
        self.out[i].iter().map(|&e| &self.edges[e])
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    /// Node id of a term, compared as normalized text.
    pub fn find(&self, term: &ProcessExpr) -> Option<usize> {
        self.index.get(&normalize(term).to_string()).copied()
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph lts {\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let shape = if self.roots.contains(&i) { ", shape=box" } else { "" };
            let _ = writeln!(s, "  n{i} [label={}{shape}];", quote(&n.to_string()));
        }
        for e in &self.edges {
            let _ = writeln!(
                s,
                "  n{} -> n{} [label={}];",
                e.source,
                e.target,
                quote(&format!("{} [{}]", e.action, sig(e.prob)))
            );
        }
        s.push_str("}\n");
        s
    }
}

pub(crate) fn quote(text: &str) -> String {
    let mut s = String::with_capacity(text.len() + 2);
    s.push('"');
    for c in text.chars() {
        match c {
            '"' => s.push_str("\\\""),
            '\\' => s.push_str("\\\\"),
            '\n' => s.push_str("\\n"),
            _ => s.push(c),
        }
    }
    s.push('"');
    s
}

/// Breadth-first closure of `roots` under `derive_transitions`. Terms are
/// normalized before they are compared.
pub fn build_lts(roots: &[ProcessExpr], env: &DefEnv, bound: usize) -> Result<Lts, GraphError> {
    let mut lts = Lts::default();
    let mut queue = VecDeque::new();
    for r in roots {
        let before = lts.len();
        let id = lts.add_node(normalize(r));
        if id == before {
            queue.push_back(id);
        }
        if !lts.roots.contains(&id) {
            lts.roots.push(id);
        }
    }
    if lts.len() > bound {
        return Err(GraphError::Budget { nodes: lts.len(), edges: 0 });
    }
    while let Some(i) = queue.pop_front() {
        let term = lts.nodes[i].clone();
        for t in derive_transitions(&term, env)? {
            let before = lts.len();
            let j = lts.add_node(normalize(&t.target));
            if j == before {
                if lts.len() > bound {
                    return Err(GraphError::Budget { nodes: lts.len(), edges: lts.edges.len() });
                }
                queue.push_back(j);
            }
            lts.add_edge(LtsEdge { source: i, action: t.action, prob: t.prob, target: j });
        }
    }
    Ok(lts)
}

/// `μ(E,α,C)`: probability of the `α`-edges of `e` that end in `class`.
pub fn mu(lts: &Lts, e: usize, alpha: &Action, class: &BTreeSet<usize>) -> f64 {
    lts.outgoing(e).filter(|edge| &edge.action == alpha && class.contains(&edge.target)).map(|edge| edge.prob).sum()
}
