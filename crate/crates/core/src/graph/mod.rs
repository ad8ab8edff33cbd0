//! State-space construction, bisimulation minimization and abstraction of a
//! scenario into its [`SecModel`] game graph.

mod bisim;
mod lts;
mod secmodel;

pub use bisim::{is_bisimilar, minimize, minimize_with, Quotient, BISIM_TOLERANCE};
pub use lts::{build_lts, mu, Lts, LtsEdge};
pub use secmodel::{path_contract, Contraction, Diagnostic, EdgeLabel, Marker, SecEdge, SecModel, Vertex};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::calculus::{normalize, CalculusError, ProcessExpr};
use crate::scenario::{channels, instantiate_all, type_tag, Scenario};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error("state space exceeds the node budget ({nodes} nodes, {edges} edges explored)")]
    Budget { nodes: usize, edges: usize },
}

#[derive(Clone, Copy, Debug)]
pub struct CompileOptions {
    pub node_budget: usize,
    /// Silent synchronizations before the `Log` step of an interaction.
    pub tau_count: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { node_budget: 200_000, tau_count: 4 }
    }
}

/// Every intermediate product of [`compile`].
#[derive(Clone, Debug)]
pub struct Compiled {
    pub lts: Lts,
    pub quotient: Quotient,
    pub model: SecModel,
    pub diagnostics: Vec<Diagnostic>,
}

/// Instantiates, explores, minimizes and contracts a scenario.
///
/// Nodes committed to different user types start in different blocks, so
/// minimization never merges interactions of distinct types.
pub fn compile(sc: &Scenario, opts: CompileOptions) -> Result<Compiled, GraphError> {
    let inst = instantiate_all(sc)?;
    let roots: Vec<ProcessExpr> = inst.roots.iter().map(|(_, r)| r.clone()).collect();
    let lts = build_lts(&roots, &inst.env, opts.node_budget)?;

    let mut tag_ids: BTreeMap<Option<String>, usize> = BTreeMap::new();
    let initial: Vec<usize> = lts
        .nodes()
        .iter()
        .map(|n| {
            let next = tag_ids.len();
            *tag_ids.entry(type_tag(n)).or_insert(next)
        })
        .collect();
    let quotient = minimize_with(&lts, &initial);
    let tags: Vec<Option<String>> = quotient.lts.nodes().iter().map(type_tag).collect();

    let markers: Vec<Marker> = inst
        .roots
        .iter()
        .map(|(name, root)| {
            let restricted = normalize(&ProcessExpr::restrict(root.clone(), channels()));
            let mut classes = Vec::new();
            for term in [root, &restricted] {
                if let Some(c) = lts.find(term).map(|n| quotient.class_of[n]) {
                    if !classes.contains(&c) {
                        classes.push(c);
                    }
                }
            }
            Marker { name: name.clone(), classes }
        })
        .collect();
    let Contraction { model, diagnostics } =
        path_contract(&quotient.lts, &markers, &tags, &sc.type_ids(), opts.tau_count);
    Ok(Compiled { lts, quotient, model, diagnostics })
}
