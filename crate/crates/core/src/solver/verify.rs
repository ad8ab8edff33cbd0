use serde::Serialize;

use super::{execution_payoff, ne_tol, SolverConfig, Strategy};
use crate::graph::SecModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    User,
    Defender,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    /// `player` gains by taking `better` instead of `chosen` once.
    Violation {
        vertex: usize,
        ty: usize,
        player: Player,
        chosen: usize,
        better: usize,
        gain: f64,
    },
    /// A vertex with edges of the type has no choice.
    NotSpanning {
        vertex: usize,
        ty: usize,
    },
    /// A choice that is not an edge of the right vertex and type.
    Invalid {
        vertex: usize,
        ty: usize,
    },
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn describe(&self, m: &SecModel) -> String {
        let edge = |e: usize| {
            let x = &m.edges[e];
            format!("act=({},{}) -> {}", x.label.user, x.label.defender, m.vertices[x.target].id)
        };
        match *self {
            Verdict::Pass => "PASS".into(),
            Verdict::Violation { vertex, ty, player, chosen, better, gain } => format!(
                "FAIL at {} type {}: {:?} prefers {} over {} (gain {gain:e})",
                m.vertices[vertex].id,
                m.types[ty],
                player,
                edge(better),
                edge(chosen)
            ),
            Verdict::NotSpanning { vertex, ty } => {
                format!("FAIL: not spanning, no choice at {} for type {}", m.vertices[vertex].id, m.types[ty])
            }
            Verdict::Invalid { vertex, ty } => {
                format!("FAIL: invalid choice at {} for type {}", m.vertices[vertex].id, m.types[ty])
            }
        }
    }
}

/// Checks that every t-execution of `s` is an equilibrium execution.
///
/// At each vertex, each alternative edge is taken once and `s` is followed
/// afterwards. The user may switch to any edge of the type; the defender only
/// to edges carrying the same user action. A gain beyond [`ne_tol`] fails.
pub fn verify_nes(m: &SecModel, s: &Strategy, cfg: &SolverConfig) -> Verdict {
    if s.choice.len() != m.types.len() || s.choice.iter().any(|r| r.len() != m.vertices.len()) {
        return Verdict::Invalid { vertex: 0, ty: 0 };
    }
    for (t, ty) in m.types.iter().enumerate() {
        for v in 0..m.vertices.len() {
            let available = m.out_edges(v, ty);
            match s.choice[t][v] {
                None if available.is_empty() => {}
                None => return Verdict::NotSpanning { vertex: v, ty: t },
                Some(e) if !available.contains(&e) => return Verdict::Invalid { vertex: v, ty: t },
                Some(_) => {}
            }
        }
    }
    for (t, ty) in m.types.iter().enumerate() {
        let value = |v: usize| execution_payoff(m, &s.execution(t, v, m), cfg);
        for v in 0..m.vertices.len() {
            let Some(chosen) = s.choice[t][v] else { continue };
            let deviate = |e: usize| {
                let l = &m.edges[e].label;
                let next = value(m.edges[e].target);
                (
                    l.weight.user + cfg.beta * l.tran_p * next.user,
                    l.weight.defender + cfg.beta * l.tran_p * next.defender,
                )
            };
            let here = value(v);
            for e in m.out_edges(v, ty) {
                let (qu, qd) = deviate(e);
                if qu > here.user + ne_tol(here.user) {
                    return Verdict::Violation {
                        vertex: v,
                        ty: t,
                        player: Player::User,
                        chosen,
                        better: e,
                        gain: qu - here.user,
                    };
                }
                if m.edges[e].label.user == m.edges[chosen].label.user && qd > here.defender + ne_tol(here.defender) {
                    return Verdict::Violation {
                        vertex: v,
                        ty: t,
                        player: Player::Defender,
                        chosen,
                        better: e,
                        gain: qd - here.defender,
                    };
                }
            }
        }
    }
    Verdict::Pass
}
