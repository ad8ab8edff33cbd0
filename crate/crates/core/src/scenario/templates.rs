//! Instantiation of the per-state process templates.
//!
//! For a state `s` and type `t`:
//!
//! ```text
//! G[s]          = Σ_t [q_t] N[s|t](t)
//! N[s|t](t)     = ((pU[s|t](t) | pD[s]()) | pN[s|t](t)) \ {Aces, Defd, Tell_u, Tell_d}
//! pU[s|t](t)    = Σ_u [1/|A^u|] Aces!(u).Tell_u?(y).0
//! pD[s]()       = Tell_d?(x). Σ_v [1/|A^d|] Defd!(v).0
//! pN[s|t](t)    = Aces?(x).Tell_d!(x).Defd?(y).Tell_u!(y).Tr[s|t](x,y,t)
//! Tr[s|t](x,y,t)= Σ_(u,v) [1/|A^u×A^d|]
//!                   if x=u & y=v then Log!((u,v)). Σ_j [p_j] Rec!((ru,rd)).G[s_j]() else 0
//! ```
//!
//! A complete interaction is therefore `τ⁴ · Log(u,v) · Rec(ru,rd)[p_j]`.

use std::collections::BTreeSet;

use super::{PayoffPair, Scenario};
use crate::calculus::{normalize, BoolExpr, CalculusError, DefEnv, ProcessExpr, Value, ValueExpr};

pub const ACES: &str = "Aces";
pub const DEFD: &str = "Defd";
pub const TELL_U: &str = "Tell_u";
pub const TELL_D: &str = "Tell_d";
pub const LOG: &str = "Log";
pub const REC: &str = "Rec";

/// Vertex name of the terminal that receives interactions without a transition
/// row when `absorb_missing` is set.
pub const ABSORB_VERTEX: &str = "absorb";

/// The restriction set `R`.
pub fn channels() -> BTreeSet<String> {
    [ACES, DEFD, TELL_U, TELL_D].iter().map(|c| c.to_string()).collect()
}

pub fn g_name(s: &str) -> String {
    format!("G[{s}]")
}

pub fn absorb_name() -> &'static str {
    "Absorb"
}

fn n_name(s: &str, t: &str) -> String {
    format!("N[{s}|{t}]")
}

fn pu_name(s: &str, t: &str) -> String {
    format!("pU[{s}|{t}]")
}

fn pd_name(s: &str) -> String {
    format!("pD[{s}]")
}

fn pn_name(s: &str, t: &str) -> String {
    format!("pN[{s}|{t}]")
}

fn tr_name(s: &str, t: &str) -> String {
    format!("Tr[{s}|{t}]")
}

const TAGGED_PREFIXES: [&str; 4] = ["N[", "pU[", "pN[", "Tr["];

/// The user type a term is committed to, read from the last argument of the
/// first type-indexed constant call in it.
pub fn type_tag(proc: &ProcessExpr) -> Option<String> {
    let mut tag = None;
    proc.for_each_call(&mut |name, args| {
        if tag.is_none() && TAGGED_PREFIXES.iter().any(|p| name.starts_with(p)) {
            if let Some(ValueExpr::Lit(Value::Sym(t))) = args.last() {
                tag = Some(t.clone());
            }
        }
    });
    tag
}

/// The terms that stand for vertex `s`: the call `G[s]()` and the normalized
/// form `G[s]()\R` reached after a `Rec` step.
pub fn marker_terms(s: &str) -> Vec<ProcessExpr> {
    let g = ProcessExpr::call(g_name(s), vec![]);
    vec![g.clone(), normalize(&ProcessExpr::restrict(g, channels()))]
}

/// Every state's root term plus the definitions they share.
pub struct Instantiation {
    /// `(vertex name, root term)`, states first in declaration order.
    pub roots: Vec<(String, ProcessExpr)>,
    pub env: DefEnv,
}

fn sym_domain<'a>(values: impl Iterator<Item = &'a String>) -> Vec<Value> {
    let set: BTreeSet<&String> = values.collect();
    set.into_iter().map(|v| Value::sym(v.clone())).collect()
}

pub fn instantiate_all(sc: &Scenario) -> Result<Instantiation, CalculusError> {
    let mut env = DefEnv::new();
    let type_ids = sc.type_ids();
    let user_values =
        sym_domain(sc.states().iter().flat_map(|s| type_ids.iter().flat_map(move |t| sc.user_actions(s, t).iter())));
    let defender_values = sym_domain(sc.states().iter().flat_map(|s| sc.defender_actions(s).iter()));
    env.declare_domain(ACES, user_values.clone());
    env.declare_domain(TELL_D, user_values);
    env.declare_domain(DEFD, defender_values.clone());
    env.declare_domain(TELL_U, defender_values);

    for s in sc.states() {
        define_state(sc, s, &mut env)?;
    }
    let mut roots: Vec<(String, ProcessExpr)> =
        sc.states().iter().map(|s| (s.clone(), ProcessExpr::call(g_name(s), vec![]))).collect();
    if sc.absorb_missing() {
        env.define(absorb_name(), vec![], ProcessExpr::nil())?;
        roots.push((ABSORB_VERTEX.to_string(), ProcessExpr::call(absorb_name(), vec![])));
    }
    let root_terms: Vec<&ProcessExpr> = roots.iter().map(|(_, r)| r).collect();
    env.check(&root_terms)?;
    Ok(Instantiation { roots, env })
}

/// `G_i` for state `s` together with the environment defining every template
/// constant of the scenario (`G_i` refers to the other states' `G_j`).
pub fn instantiate_processes(sc: &Scenario, s: &str) -> Result<(ProcessExpr, DefEnv), CalculusError> {
    if !sc.has_state(s) {
        return Err(CalculusError::UnknownConstant(g_name(s)));
    }
    let inst = instantiate_all(sc)?;
    let body =
        inst.env.get(&g_name(s)).map(|d| d.body.clone()).ok_or_else(|| CalculusError::UnknownConstant(g_name(s)))?;
    Ok((body, inst.env))
}

fn define_state(sc: &Scenario, s: &str, env: &mut DefEnv) -> Result<(), CalculusError> {
    let defender = sc.defender_actions(s);
    env.define(
        pd_name(s),
        vec![],
        ProcessExpr::input(
            TELL_D,
            "x",
            ProcessExpr::uniform(
                defender
                    .iter()
                    .map(|v| ProcessExpr::output(DEFD, ValueExpr::sym(v.clone()), ProcessExpr::nil()))
                    .collect(),
            ),
        ),
    )?;

    let mut type_branches = Vec::new();
    for (t, q) in sc.types() {
        let tag = || vec![ValueExpr::sym(t)];
        let user = sc.user_actions(s, t);
        if user.is_empty() {
            env.define(n_name(s, t), vec!["t".into()], ProcessExpr::nil())?;
        } else {
            env.define(
                pu_name(s, t),
                vec!["t".into()],
                ProcessExpr::uniform(
                    user.iter()
                        .map(|u| {
                            ProcessExpr::output(
                                ACES,
                                ValueExpr::sym(u.clone()),
                                ProcessExpr::input(TELL_U, "y", ProcessExpr::nil()),
                            )
                        })
                        .collect(),
                ),
            )?;
            env.define(
                pn_name(s, t),
                vec!["t".into()],
                ProcessExpr::input(
                    ACES,
                    "x",
                    ProcessExpr::output(
                        TELL_D,
                        ValueExpr::var("x"),
                        ProcessExpr::input(
                            DEFD,
                            "y",
                            ProcessExpr::output(
                                TELL_U,
                                ValueExpr::var("y"),
                                ProcessExpr::call(
                                    tr_name(s, t),
                                    vec![ValueExpr::var("x"), ValueExpr::var("y"), ValueExpr::var("t")],
                                ),
                            ),
                        ),
                    ),
                ),
            )?;
            env.define(tr_name(s, t), vec!["x".into(), "y".into(), "t".into()], tr_body(sc, s, t, user, defender)?)?;
            env.define(
                n_name(s, t),
                vec!["t".into()],
                ProcessExpr::restrict(
                    ProcessExpr::par(
                        ProcessExpr::par(
                            ProcessExpr::call(pu_name(s, t), vec![ValueExpr::var("t")]),
                            ProcessExpr::call(pd_name(s), vec![]),
                        ),
                        ProcessExpr::call(pn_name(s, t), vec![ValueExpr::var("t")]),
                    ),
                    channels(),
                ),
            )?;
        }
        // A type with prior 0 is never presumed by Nature.
        if q > 0.0 {
            type_branches.push((q, ProcessExpr::call(n_name(s, t), tag())));
        }
    }
    env.define(g_name(s), vec![], ProcessExpr::choice(type_branches)?)
}

fn tr_body(
    sc: &Scenario,
    s: &str,
    t: &str,
    user: &[String],
    defender: &[String],
) -> Result<ProcessExpr, CalculusError> {
    let mut branches = Vec::new();
    for u in user {
        for v in defender {
            let pair = ValueExpr::Tuple(vec![ValueExpr::sym(u.clone()), ValueExpr::sym(v.clone())]);
            let w = sc.payoff(s, t, u, v).unwrap_or(PayoffPair::ZERO);
            let reward = ValueExpr::Lit(Value::pair(Value::Num(w.user), Value::Num(w.defender)));
            let after_log = match sc.transition_row(s, t, u, v) {
                Some(row) => ProcessExpr::choice(
                    row.iter()
                        .map(|(s2, p)| {
                            (*p, ProcessExpr::output(REC, reward.clone(), ProcessExpr::call(g_name(s2), vec![])))
                        })
                        .collect(),
                )?,
                None if sc.absorb_missing() => {
                    ProcessExpr::output(REC, reward, ProcessExpr::call(absorb_name(), vec![]))
                }
                None => ProcessExpr::nil(),
            };
            let guard = BoolExpr::And(vec![
                BoolExpr::eq(ValueExpr::var("x"), ValueExpr::sym(u.clone())),
                BoolExpr::eq(ValueExpr::var("y"), ValueExpr::sym(v.clone())),
            ]);
            branches.push(ProcessExpr::if_then_else(
                guard,
                ProcessExpr::output(LOG, pair, after_log),
                ProcessExpr::nil(),
            ));
        }
    }
    Ok(ProcessExpr::uniform(branches))
}
