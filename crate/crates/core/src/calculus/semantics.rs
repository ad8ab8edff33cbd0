//! Transition derivation for process terms.
//!
//! Each syntactic form is handled by exactly one of the rules In, Out, Sum,
//! Res, Par_l/Par_r/Com, Rel, Con and if_t/if_f. Transitions with the same
//! action and the same target are merged by adding their probabilities, and the
//! result is sorted by (action, target) text so derivation is deterministic.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::eval::{eval_bool, eval_value, substitute, Binding};
use super::syntax::{Action, DefEnv, Prefix, ProcessExpr, ValueExpr};
use super::CalculusError;

/// Consecutive constant unfoldings allowed without passing a prefix.
const MAX_UNFOLD_DEPTH: usize = 64;

/// `E →^{α[p]} E′`.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub action: Action,
    pub prob: f64,
    pub target: ProcessExpr,
}

impl Transition {
    fn new(action: Action, prob: f64, target: ProcessExpr) -> Self {
        Transition { action, prob, target }
    }
}

pub fn derive_transitions(proc: &ProcessExpr, env: &DefEnv) -> Result<Vec<Transition>, CalculusError> {
    let raw = derive(proc, env, 0)?;
    Ok(merge(raw))
}

/// `ν(E,R)`: total probability of the transitions of `E` whose channel is not in
/// `R`. τ transitions always count.
pub fn restriction_mass(proc: &ProcessExpr, restricted: &BTreeSet<String>, env: &DefEnv) -> Result<f64, CalculusError> {
    Ok(derive(proc, env, 0)?.iter().filter(|t| !is_restricted(&t.action, restricted)).map(|t| t.prob).sum())
}

fn is_restricted(action: &Action, restricted: &BTreeSet<String>) -> bool {
    action.chan().is_some_and(|c| restricted.contains(c))
}

fn derive(proc: &ProcessExpr, env: &DefEnv, depth: usize) -> Result<Vec<Transition>, CalculusError> {
    match proc {
        ProcessExpr::Nil => Ok(Vec::new()),
        ProcessExpr::Prefix(prefix, cont) => match prefix {
            // Out
            Prefix::Output { chan, expr } => {
                let value = eval_value(expr, &Binding::new())?;
                Ok(vec![Transition::new(Action::output(chan.clone(), value), 1.0, (**cont).clone())])
            }
            Prefix::Tau => Ok(vec![Transition::new(Action::Tau, 1.0, (**cont).clone())]),
            // In: one transition per value of the channel's declared domain.
            Prefix::Input { chan, var } => {
                let domain = env.domain(chan).ok_or_else(|| CalculusError::UndeclaredDomain(chan.clone()))?;
                Ok(domain
                    .iter()
                    .map(|v| {
                        let target = substitute(cont, &ValueExpr::Lit(v.clone()), var);
                        Transition::new(Action::input(chan.clone(), v.clone()), 1.0, target)
                    })
                    .collect())
            }
        },
        // Sum: p_i · q
        ProcessExpr::Choice(branches) => {
            let mut out = Vec::new();
            for b in branches.iter() {
                for t in derive(&b.proc, env, depth)? {
                    out.push(Transition::new(t.action, b.prob * t.prob, t.target));
                }
            }
            Ok(out)
        }
        ProcessExpr::Par(l, r) => {
            let left = derive(l, env, depth)?;
            let right = derive(r, env, depth)?;
            let mut out = Vec::with_capacity(left.len() + right.len());
            // Par_l
            for t in &left {
                out.push(Transition::new(
                    t.action.clone(),
                    t.prob,
                    ProcessExpr::Par(Arc::new(t.target.clone()), r.clone()),
                ));
            }
            // Par_r
            for t in &right {
                out.push(Transition::new(
                    t.action.clone(),
                    t.prob,
                    ProcessExpr::Par(l.clone(), Arc::new(t.target.clone())),
                ));
            }
            // Com
            for a in &left {
                for b in &right {
                    if a.action.complements(&b.action) {
                        out.push(Transition::new(
                            Action::Tau,
                            a.prob * b.prob,
                            ProcessExpr::par(a.target.clone(), b.target.clone()),
                        ));
                    }
                }
            }
            Ok(out)
        }
        // Res: p / ν(E,R); a term with no surviving transition deadlocks.
        ProcessExpr::Restrict(p, chans) => {
            let kept: Vec<Transition> =
                derive(p, env, depth)?.into_iter().filter(|t| !is_restricted(&t.action, chans)).collect();
            let nu: f64 = kept.iter().map(|t| t.prob).sum();
            if nu <= 0.0 {
                return Ok(Vec::new());
            }
            Ok(kept
                .into_iter()
                .map(|t| {
                    Transition::new(t.action, t.prob / nu, ProcessExpr::Restrict(Arc::new(t.target), chans.clone()))
                })
                .collect())
        }
        // Rel
        ProcessExpr::Relabel(p, f) => Ok(derive(p, env, depth)?
            .into_iter()
            .map(|t| Transition::new(f.apply(&t.action), t.prob, ProcessExpr::Relabel(Arc::new(t.target), f.clone())))
            .collect()),
        // if_t / if_f
        ProcessExpr::If(guard, then, otherwise) => {
            if eval_bool(guard, &Binding::new())? {
                derive(then, env, depth)
            } else {
                derive(otherwise, env, depth)
            }
        }
        // Con
        ProcessExpr::Call(name, args) => {
            if depth >= MAX_UNFOLD_DEPTH {
                return Err(CalculusError::UnguardedRecursion(name.clone()));
            }
            let body = unfold(name, args, env)?;
            derive(&body, env, depth + 1)
        }
    }
}

/// Instantiates the body of `name` with the (closed) arguments.
pub fn unfold(name: &str, args: &[ValueExpr], env: &DefEnv) -> Result<ProcessExpr, CalculusError> {
    let def = env.get(name).ok_or_else(|| CalculusError::UnknownConstant(name.to_string()))?;
    if def.params.len() != args.len() {
        return Err(CalculusError::Arity { name: name.to_string(), expected: def.params.len(), got: args.len() });
    }
    let mut body = def.body.clone();
    for (param, arg) in def.params.iter().zip(args) {
        let value = eval_value(arg, &Binding::new())?;
        body = substitute(&body, &ValueExpr::Lit(value), param);
    }
    Ok(body)
}

fn merge(raw: Vec<Transition>) -> Vec<Transition> {
    let mut keyed: Vec<(String, String, Transition)> =
        raw.into_iter().map(|t| (t.action.to_string(), t.target.to_string(), t)).collect();
    keyed.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    let mut out: Vec<(String, String, Transition)> = Vec::with_capacity(keyed.len());
    for item in keyed {
        match out.last_mut() {
            Some(last) if last.0 == item.0 && last.1 == item.1 => last.2.prob += item.2.prob,
            _ => out.push(item),
        }
    }
    out.into_iter().map(|(_, _, t)| t).collect()
}

/// Rewrites a term with structural identities that preserve its transitions
/// exactly:
///
/// * `E | Nil ≡ Nil | E ≡ E`
/// * `Nil\R ≡ Nil`
/// * `(E\R)\R′ ≡ E\R` when `R′ ⊆ R`, since a restricted term only moves on
///   channels outside `R` and its outgoing mass is already 0 or 1.
///
/// Only the active (unguarded) structure is rewritten.
pub fn normalize(proc: &ProcessExpr) -> ProcessExpr {
    match proc {
        ProcessExpr::Par(l, r) => {
            let l = normalize(l);
            let r = normalize(r);
            match (l.is_nil(), r.is_nil()) {
                (true, _) => r,
                (_, true) => l,
                _ => ProcessExpr::par(l, r),
            }
        }
        ProcessExpr::Restrict(p, chans) => {
            let inner = normalize(p);
            match &inner {
                ProcessExpr::Nil => ProcessExpr::Nil,
                ProcessExpr::Restrict(_, inner_chans) if chans.is_subset(inner_chans) => inner,
                _ => ProcessExpr::Restrict(Arc::new(inner), chans.clone()),
            }
        }
        ProcessExpr::Relabel(p, f) => {
            let inner = normalize(p);
            if inner.is_nil() {
                ProcessExpr::Nil
            } else {
                ProcessExpr::Relabel(Arc::new(inner), f.clone())
            }
        }
        _ => proc.clone(),
    }
}
