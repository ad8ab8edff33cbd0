use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use serde::Serialize;

use super::lts::{quote, Lts};
use crate::calculus::{Action, Value};
use crate::numfmt::sig;
use crate::scenario::{PayoffPair, LOG, REC, SUM_TOLERANCE};

/// `(t, q, (u,v), p_ij, (r^u,r^d))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeLabel {
    #[serde(rename = "type")]
    pub ty: String,
    pub type_prob: f64,
    pub user: String,
    pub defender: String,
    pub tran_p: f64,
    pub weight: PayoffPair,
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "t={} q={} act=({},{}) p={} w=({},{})",
            self.ty,
            sig(self.type_prob),
            self.user,
            self.defender,
            sig(self.tran_p),
            sig(self.weight.user),
            sig(self.weight.defender)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SecEdge {
    pub source: usize,
    pub target: usize,
    pub label: EdgeLabel,
}

/// A vertex stands for one class of bisimilar states; `id` is its first member.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Vertex {
    pub id: String,
    pub members: Vec<String>,
}

impl Vertex {
    pub fn single(id: impl Into<String>) -> Self {
        let id = id.into();
        Vertex { members: vec![id.clone()], id }
    }

    pub fn display_name(&self) -> String {
        self.members.join("~")
    }
}

/// The abstracted game graph. Edges form a multiset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SecModel {
    pub vertices: Vec<Vertex>,
    pub types: Vec<String>,
    pub edges: Vec<SecEdge>,
}

impl SecModel {
    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices
            .iter()
            .position(|v| v.id == id)
            .or_else(|| self.vertices.iter().position(|v| v.members.iter().any(|m| m == id)))
    }

    pub fn type_index(&self, ty: &str) -> Option<usize> {
        self.types.iter().position(|t| t == ty)
    }

    /// Indices of the type-`ty` edges leaving `v`, in edge order.
    pub fn out_edges(&self, v: usize, ty: &str) -> Vec<usize> {
        self.edges.iter().enumerate().filter(|(_, e)| e.source == v && e.label.ty == ty).map(|(i, _)| i).collect()
    }

    /// `(vertex, type, u, v)` groups whose `tran_p` do not sum to 1.
    pub fn unbalanced_rows(&self) -> Vec<(String, String, String, String, f64)> {
        let mut sums: BTreeMap<(usize, &str, &str, &str), f64> = BTreeMap::new();
        for e in &self.edges {
            *sums.entry((e.source, &e.label.ty, &e.label.user, &e.label.defender)).or_default() += e.label.tran_p;
        }
        sums.into_iter()
            .filter(|(_, s)| (s - 1.0).abs() > SUM_TOLERANCE)
            .map(|((v, t, u, d), s)| (self.vertices[v].id.clone(), t.into(), u.into(), d.into(), s))
            .collect()
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph secmodel {\n");
        for v in &self.vertices {
            let _ = writeln!(s, "  {} [label={}];", quote(&v.id), quote(&v.display_name()));
        }
        for e in &self.edges {
            let _ = writeln!(
                s,
                "  {} -> {} [label={}];",
                quote(&self.vertices[e.source].id),
                quote(&self.vertices[e.target].id),
                quote(&e.label.to_string())
            );
        }
        s.push_str("}\n");
        s
    }
}

/// A trace from a marked vertex that does not have the expected interaction
/// shape, or that stops before reaching another marked vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub vertex: String,
    pub trace: Vec<String>,
    pub reason: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} (trace {})", self.vertex, self.reason, self.trace.join(" . "))
    }
}

#[derive(Clone, Debug)]
pub struct Contraction {
    pub model: SecModel,
    pub diagnostics: Vec<Diagnostic>,
}

/// A marked vertex: its name and the quotient nodes that stand for it.
#[derive(Clone, Debug)]
pub struct Marker {
    pub name: String,
    pub classes: Vec<usize>,
}

struct Walk<'a> {
    lts: &'a Lts,
    vertex_of: &'a BTreeMap<usize, usize>,
    tau_count: usize,
}

struct Partial {
    ty: String,
    trace: Vec<String>,
}

/// Replaces every interaction `τ^k · Log(u,v) · Rec(r)[p]` between marked
/// nodes of `lts` by one SecModel edge.
///
/// `tags[c]` is the user type node `c` is committed to; the type probability
/// of an edge is the first-step τ mass into nodes of its type. Internal nodes
/// may branch (the defender's choice happens mid-path), so every path is
/// followed. Exact duplicate edges are merged.
pub fn path_contract(
    lts: &Lts,
    markers: &[Marker],
    tags: &[Option<String>],
    types: &[String],
    tau_count: usize,
) -> Contraction {
    // Names sharing a node are one vertex.
    let mut vertices: Vec<Vertex> = Vec::new();
    let mut vertex_of: BTreeMap<usize, usize> = BTreeMap::new();
    let mut start_of: Vec<usize> = Vec::new();
    for m in markers {
        let existing = m.classes.iter().find_map(|c| vertex_of.get(c).copied());
        let v = match existing {
            Some(v) => {
                vertices[v].members.push(m.name.clone());
                v
            }
            None => {
                vertices.push(Vertex::single(m.name.clone()));
                start_of.push(m.classes[0]);
                vertices.len() - 1
            }
        };
        for &c in &m.classes {
            vertex_of.entry(c).or_insert(v);
        }
    }

    let walk = Walk { lts, vertex_of: &vertex_of, tau_count };
    let mut edges: Vec<SecEdge> = Vec::new();
    let mut diagnostics = Vec::new();
    for (v, &start) in start_of.iter().enumerate() {
        let name = vertices[v].id.clone();
        let mut q: BTreeMap<String, f64> = BTreeMap::new();
        for e in lts.outgoing(start) {
            if let (true, Some(t)) = (e.action.is_tau(), &tags[e.target]) {
                *q.entry(t.clone()).or_default() += e.prob;
            }
        }
        for e in lts.outgoing(start) {
            let tag = if e.action.is_tau() { tags[e.target].clone() } else { None };
            match tag {
                Some(ty) => {
                    let partial = Partial { ty, trace: vec![e.action.to_string()] };
                    walk.follow(v, &name, e.target, 1, partial, &q, &mut edges, &mut diagnostics);
                }
                None => diagnostics.push(Diagnostic {
                    vertex: name.clone(),
                    trace: vec![e.action.to_string()],
                    reason: "first step does not select a user type".into(),
                }),
            }
        }
    }

    let mut unique: Vec<SecEdge> = Vec::with_capacity(edges.len());
    for e in edges {
        if !unique.contains(&e) {
            unique.push(e);
        }
    }
    let mut types_out: Vec<String> = types.to_vec();
    for e in &unique {
        if !types_out.contains(&e.label.ty) {
            types_out.push(e.label.ty.clone());
        }
    }
    Contraction { model: SecModel { vertices, types: types_out, edges: unique }, diagnostics }
}

impl Walk<'_> {
    #[allow(clippy::too_many_arguments)]
    fn follow(
        &self,
        source: usize,
        name: &str,
        node: usize,
        taus: usize,
        partial: Partial,
        q: &BTreeMap<String, f64>,
        edges: &mut Vec<SecEdge>,
        diagnostics: &mut Vec<Diagnostic>,
    ) {
        let report = |diagnostics: &mut Vec<Diagnostic>, trace: &[String], reason: &str| {
            diagnostics.push(Diagnostic { vertex: name.to_string(), trace: trace.to_vec(), reason: reason.into() });
        };
        let out: Vec<_> = self.lts.outgoing(node).collect();
        if out.is_empty() {
            report(diagnostics, &partial.trace, "interaction stops");
            return;
        }
        for e in out {
            let mut trace = partial.trace.clone();
            trace.push(e.action.to_string());
            if taus < self.tau_count {
                if e.action.is_tau() {
                    let next = Partial { ty: partial.ty.clone(), trace };
                    self.follow(source, name, e.target, taus + 1, next, q, edges, diagnostics);
                } else {
                    report(diagnostics, &trace, "expected a silent synchronization");
                }
                continue;
            }
            let Some((u, v)) = log_pair(&e.action) else {
                report(diagnostics, &trace, "expected Log(u,v)");
                continue;
            };
            let recs: Vec<_> = self.lts.outgoing(e.target).collect();
            if recs.is_empty() {
                report(diagnostics, &trace, "no state transition after Log");
                continue;
            }
            for r in recs {
                let mut full = trace.clone();
                full.push(format!("{} [{}]", r.action, sig(r.prob)));
                let (Some(weight), Some(&target)) = (rec_weight(&r.action), self.vertex_of.get(&r.target)) else {
                    report(diagnostics, &full, "expected Rec(r^u,r^d) into a state");
                    continue;
                };
                edges.push(SecEdge {
                    source,
                    target,
                    label: EdgeLabel {
                        ty: partial.ty.clone(),
                        type_prob: q.get(&partial.ty).copied().unwrap_or(0.0),
                        user: u.clone(),
                        defender: v.clone(),
                        tran_p: r.prob,
                        weight,
                    },
                });
            }
        }
    }
}

fn log_pair(a: &Action) -> Option<(String, String)> {
    match a {
        Action::Output { chan, value: Value::Tuple(items) } if chan == LOG && items.len() == 2 => {
            Some((plain(&items[0]), plain(&items[1])))
        }
        _ => None,
    }
}

fn plain(v: &Value) -> String {
    match v {
        Value::Sym(s) => s.clone(),
        other => other.to_string(),
    }
}

fn rec_weight(a: &Action) -> Option<PayoffPair> {
    match a {
        Action::Output { chan, value: Value::Tuple(items) } if chan == REC && items.len() == 2 => {
            Some(PayoffPair::new(items[0].as_num()?, items[1].as_num()?))
        }
        _ => None,
    }
}
