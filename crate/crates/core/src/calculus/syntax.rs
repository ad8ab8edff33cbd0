use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use super::CalculusError;

/// Tolerance within which probabilistic choice weights are silently renormalized.
pub const CHOICE_SUM_TOLERANCE: f64 = 1e-9;
/// Deviation of a choice's total weight from 1 beyond which construction fails.
pub const CHOICE_SUM_HARD_LIMIT: f64 = 1e-6;

/// A concrete value carried on a channel.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Num(f64),
    Sym(String),
    Tuple(Vec<Value>),
}

impl Value {
    pub fn sym(s: impl Into<String>) -> Self {
        Value::Sym(s.into())
    }

    pub fn pair(a: Value, b: Value) -> Self {
        Value::Tuple(vec![a, b])
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Value::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            Value::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            // `{:?}` is the shortest representation that round-trips, and always
            // carries a decimal point so it never collides with an `Int`.
            Value::Num(x) => write!(f, "{x:?}"),
            Value::Sym(s) => write!(f, "{s:?}"),
            Value::Tuple(items) => {
                f.write_str("(")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ValueExpr {
    Lit(Value),
    Var(String),
    Tuple(Vec<ValueExpr>),
}

impl ValueExpr {
    pub fn var(name: impl Into<String>) -> Self {
        ValueExpr::Var(name.into())
    }

    pub fn int(i: i64) -> Self {
        ValueExpr::Lit(Value::Int(i))
    }

    pub fn sym(s: impl Into<String>) -> Self {
        ValueExpr::Lit(Value::Sym(s.into()))
    }

    pub fn is_closed(&self) -> bool {
        match self {
            ValueExpr::Lit(_) => true,
            ValueExpr::Var(_) => false,
            ValueExpr::Tuple(items) => items.iter().all(ValueExpr::is_closed),
        }
    }

    pub(crate) fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            ValueExpr::Lit(_) => {}
            ValueExpr::Var(x) => {
                out.insert(x.clone());
            }
            ValueExpr::Tuple(items) => items.iter().for_each(|e| e.free_vars(out)),
        }
    }
}

impl From<Value> for ValueExpr {
    fn from(v: Value) -> Self {
        ValueExpr::Lit(v)
    }
}

impl fmt::Display for ValueExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueExpr::Lit(v) => write!(f, "{v}"),
            ValueExpr::Var(x) => f.write_str(x),
            ValueExpr::Tuple(items) => {
                f.write_str("(")?;
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{e}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoolExpr {
    Lit(bool),
    Eq(ValueExpr, ValueExpr),
    And(Vec<BoolExpr>),
}

impl BoolExpr {
    pub fn eq(a: ValueExpr, b: ValueExpr) -> Self {
        BoolExpr::Eq(a, b)
    }

    pub(crate) fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            BoolExpr::Lit(_) => {}
            BoolExpr::Eq(a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
            BoolExpr::And(items) => items.iter().for_each(|b| b.free_vars(out)),
        }
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoolExpr::Lit(b) => write!(f, "{b}"),
            BoolExpr::Eq(a, b) => write!(f, "{a}={b}"),
            BoolExpr::And(items) => {
                f.write_str("(")?;
                for (i, b) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    write!(f, "{b}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Syntactic action prefix: `a(x)`, `ā(e)` or `τ`.
#[derive(Clone, Debug, PartialEq)]
pub enum Prefix {
    Input { chan: String, var: String },
    Output { chan: String, expr: ValueExpr },
    Tau,
}

impl Prefix {
    pub fn chan(&self) -> Option<&str> {
        match self {
            Prefix::Input { chan, .. } | Prefix::Output { chan, .. } => Some(chan),
            Prefix::Tau => None,
        }
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prefix::Input { chan, var } => write!(f, "{chan}?({var})"),
            Prefix::Output { chan, expr } => write!(f, "{chan}!({expr})"),
            Prefix::Tau => f.write_str("tau"),
        }
    }
}

/// An action with concrete values, as performed by a transition.
#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Input { chan: String, value: Value },
    Output { chan: String, value: Value },
    Tau,
}

impl Action {
    pub fn input(chan: impl Into<String>, value: Value) -> Self {
        Action::Input { chan: chan.into(), value }
    }

    pub fn output(chan: impl Into<String>, value: Value) -> Self {
        Action::Output { chan: chan.into(), value }
    }

    /// `chan(α)`; `None` for τ.
    pub fn chan(&self) -> Option<&str> {
        match self {
            Action::Input { chan, .. } | Action::Output { chan, .. } => Some(chan),
            Action::Tau => None,
        }
    }

    pub fn value(&self) -> Option<&Value> {
        match self {
            Action::Input { value, .. } | Action::Output { value, .. } => Some(value),
            Action::Tau => None,
        }
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, Action::Tau)
    }

    /// True when the two actions are an input and an output on the same channel
    /// carrying the same value.
    pub fn complements(&self, other: &Action) -> bool {
        match (self, other) {
            (Action::Input { chan: a, value: x }, Action::Output { chan: b, value: y })
            | (Action::Output { chan: a, value: x }, Action::Input { chan: b, value: y }) => a == b && x == y,
            _ => false,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Input { chan, value } => write!(f, "{chan}?{value}"),
            Action::Output { chan, value } => write!(f, "{chan}!{value}"),
            Action::Tau => f.write_str("tau"),
        }
    }
}

/// A channel relabelling `f`, required to be a permutation of its own key set.
#[derive(Clone, Debug, PartialEq)]
pub struct Relabeling {
    map: BTreeMap<String, String>,
}

impl Relabeling {
    pub fn new(map: BTreeMap<String, String>) -> Result<Self, CalculusError> {
        let keys: BTreeSet<&String> = map.keys().collect();
        let values: BTreeSet<&String> = map.values().collect();
        if keys != values {
            return Err(CalculusError::NotBijective);
        }
        Ok(Relabeling { map })
    }

    pub fn apply_chan<'a>(&'a self, chan: &'a str) -> &'a str {
        self.map.get(chan).map(String::as_str).unwrap_or(chan)
    }

    pub fn apply(&self, action: &Action) -> Action {
        match action {
            Action::Input { chan, value } => Action::input(self.apply_chan(chan), value.clone()),
            Action::Output { chan, value } => Action::output(self.apply_chan(chan), value.clone()),
            Action::Tau => Action::Tau,
        }
    }
}

impl fmt::Display for Relabeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, (a, b)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}->{b}")?;
        }
        f.write_str("]")
    }
}

/// One branch `[p]E` of a probabilistic choice.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub prob: f64,
    pub proc: ProcessExpr,
}

/// A process term. Children are reference counted so that derivations can share
/// untouched subterms.
#[derive(Clone, Debug, PartialEq)]
pub enum ProcessExpr {
    Nil,
    Prefix(Prefix, Arc<ProcessExpr>),
    Choice(Arc<Vec<Branch>>),
    Par(Arc<ProcessExpr>, Arc<ProcessExpr>),
    Restrict(Arc<ProcessExpr>, Arc<BTreeSet<String>>),
    Relabel(Arc<ProcessExpr>, Arc<Relabeling>),
    If(BoolExpr, Arc<ProcessExpr>, Arc<ProcessExpr>),
    Call(String, Vec<ValueExpr>),
}

impl ProcessExpr {
    pub fn nil() -> Self {
        ProcessExpr::Nil
    }

    pub fn prefix(prefix: Prefix, cont: ProcessExpr) -> Self {
        ProcessExpr::Prefix(prefix, Arc::new(cont))
    }

    pub fn input(chan: impl Into<String>, var: impl Into<String>, cont: ProcessExpr) -> Self {
        Self::prefix(Prefix::Input { chan: chan.into(), var: var.into() }, cont)
    }

    pub fn output(chan: impl Into<String>, expr: impl Into<ValueExpr>, cont: ProcessExpr) -> Self {
        Self::prefix(Prefix::Output { chan: chan.into(), expr: expr.into() }, cont)
    }

    pub fn tau(cont: ProcessExpr) -> Self {
        Self::prefix(Prefix::Tau, cont)
    }

    /// Builds `Σ[p_i]E_i`, renormalizing the weights so they sum to exactly 1.
    ///
    /// Weights must lie in (0,1] and sum to 1 within [`CHOICE_SUM_HARD_LIMIT`].
    /// An empty sum is `Nil`.
    pub fn choice(branches: Vec<(f64, ProcessExpr)>) -> Result<Self, CalculusError> {
        if branches.is_empty() {
            return Ok(ProcessExpr::Nil);
        }
        for (p, _) in &branches {
            if !(p.is_finite() && *p > 0.0 && *p <= 1.0 + CHOICE_SUM_TOLERANCE) {
                return Err(CalculusError::ProbabilityRange(*p));
            }
        }
        let total: f64 = branches.iter().map(|(p, _)| p).sum();
        if (total - 1.0).abs() > CHOICE_SUM_HARD_LIMIT {
            return Err(CalculusError::ProbabilitySum(total));
        }
        let branches = branches
            .into_iter()
            .map(|(p, proc)| Branch { prob: if total == 1.0 { p } else { p / total }, proc })
            .collect();
        Ok(ProcessExpr::Choice(Arc::new(branches)))
    }

    /// Uniform choice over the given terms.
    pub fn uniform(procs: Vec<ProcessExpr>) -> Self {
        if procs.is_empty() {
            return ProcessExpr::Nil;
        }
        let p = 1.0 / procs.len() as f64;
        let branches = procs.into_iter().map(|proc| Branch { prob: p, proc }).collect();
        ProcessExpr::Choice(Arc::new(branches))
    }

    pub fn par(left: ProcessExpr, right: ProcessExpr) -> Self {
        ProcessExpr::Par(Arc::new(left), Arc::new(right))
    }

    pub fn restrict<I, S>(proc: ProcessExpr, chans: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set = chans.into_iter().map(Into::into).collect();
        ProcessExpr::Restrict(Arc::new(proc), Arc::new(set))
    }

    pub fn relabel(proc: ProcessExpr, f: Relabeling) -> Self {
        ProcessExpr::Relabel(Arc::new(proc), Arc::new(f))
    }

    pub fn if_then_else(guard: BoolExpr, then: ProcessExpr, otherwise: ProcessExpr) -> Self {
        ProcessExpr::If(guard, Arc::new(then), Arc::new(otherwise))
    }

    pub fn call(name: impl Into<String>, args: Vec<ValueExpr>) -> Self {
        ProcessExpr::Call(name.into(), args)
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, ProcessExpr::Nil)
    }

    /// Free value variables of the term.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        match self {
            ProcessExpr::Nil => {}
            ProcessExpr::Prefix(prefix, cont) => match prefix {
                Prefix::Input { var, .. } => {
                    let mut inner = BTreeSet::new();
                    cont.collect_free(&mut inner);
                    inner.remove(var);
                    out.extend(inner);
                }
                Prefix::Output { expr, .. } => {
                    expr.free_vars(out);
                    cont.collect_free(out);
                }
                Prefix::Tau => cont.collect_free(out),
            },
            ProcessExpr::Choice(branches) => branches.iter().for_each(|b| b.proc.collect_free(out)),
            ProcessExpr::Par(l, r) => {
                l.collect_free(out);
                r.collect_free(out);
            }
            ProcessExpr::Restrict(p, _) | ProcessExpr::Relabel(p, _) => p.collect_free(out),
            ProcessExpr::If(b, t, e) => {
                b.free_vars(out);
                t.collect_free(out);
                e.collect_free(out);
            }
            ProcessExpr::Call(_, args) => args.iter().for_each(|a| a.free_vars(out)),
        }
    }

    /// Visits every constant call in the term, including under prefixes.
    pub fn for_each_call<'a>(&'a self, f: &mut impl FnMut(&'a str, &'a [ValueExpr])) {
        match self {
            ProcessExpr::Nil => {}
            ProcessExpr::Prefix(_, cont) => cont.for_each_call(f),
            ProcessExpr::Choice(branches) => branches.iter().for_each(|b| b.proc.for_each_call(f)),
            ProcessExpr::Par(l, r) => {
                l.for_each_call(f);
                r.for_each_call(f);
            }
            ProcessExpr::Restrict(p, _) | ProcessExpr::Relabel(p, _) => p.for_each_call(f),
            ProcessExpr::If(_, t, e) => {
                t.for_each_call(f);
                e.for_each_call(f);
            }
            ProcessExpr::Call(name, args) => f(name, args),
        }
    }
}

impl fmt::Display for ProcessExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessExpr::Nil => f.write_str("0"),
            ProcessExpr::Prefix(prefix, cont) => write!(f, "{prefix}.{cont}"),
            ProcessExpr::Choice(branches) => {
                f.write_str("(")?;
                for (i, b) in branches.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "[{:?}]{}", b.prob, b.proc)?;
                }
                f.write_str(")")
            }
            ProcessExpr::Par(l, r) => write!(f, "({l} | {r})"),
            ProcessExpr::Restrict(p, chans) => {
                write!(f, "({p})\\{{")?;
                for (i, c) in chans.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    f.write_str(c)?;
                }
                f.write_str("}")
            }
            ProcessExpr::Relabel(p, rel) => write!(f, "({p}){rel}"),
            ProcessExpr::If(b, t, e) => write!(f, "(if {b} then {t} else {e})"),
            ProcessExpr::Call(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// `A(x₁,…,xₙ) def= E`.
#[derive(Clone, Debug, PartialEq)]
pub struct Definition {
    pub params: Vec<String>,
    pub body: ProcessExpr,
}

/// Constant definitions plus the finite value domain of every input channel.
#[derive(Clone, Debug, Default)]
pub struct DefEnv {
    defs: BTreeMap<String, Definition>,
    domains: BTreeMap<String, Vec<Value>>,
}

impl DefEnv {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `name(params) def= body`. The body may not mention value variables
    /// other than the parameters.
    pub fn define(
        &mut self,
        name: impl Into<String>,
        params: Vec<String>,
        body: ProcessExpr,
    ) -> Result<(), CalculusError> {
        let name = name.into();
        let free = body.free_vars();
        if let Some(var) = free.iter().find(|v| !params.contains(v)) {
            return Err(CalculusError::FreeVariable { name, var: var.clone() });
        }
        self.defs.insert(name, Definition { params, body });
        Ok(())
    }

    pub fn declare_domain(&mut self, chan: impl Into<String>, values: Vec<Value>) {
        self.domains.insert(chan.into(), values);
    }

    pub fn get(&self, name: &str) -> Option<&Definition> {
        self.defs.get(name)
    }

    pub fn domain(&self, chan: &str) -> Option<&[Value]> {
        self.domains.get(chan).map(Vec::as_slice)
    }

    pub fn definitions(&self) -> impl Iterator<Item = (&String, &Definition)> {
        self.defs.iter()
    }

    /// Checks that every constant call in every body (and in `extra`) names a
    /// definition with the right arity.
    pub fn check(&self, extra: &[&ProcessExpr]) -> Result<(), CalculusError> {
        let mut first_err = None;
        let mut visit = |name: &str, args: &[ValueExpr]| {
            if first_err.is_some() {
                return;
            }
            match self.defs.get(name) {
                None => first_err = Some(CalculusError::UnknownConstant(name.to_string())),
                Some(def) if def.params.len() != args.len() => {
                    first_err = Some(CalculusError::Arity {
                        name: name.to_string(),
                        expected: def.params.len(),
                        got: args.len(),
                    })
                }
                Some(_) => {}
            }
        };
        for def in self.defs.values() {
            def.body.for_each_call(&mut visit);
        }
        for e in extra {
            e.for_each_call(&mut visit);
        }
        first_err.map_or(Ok(()), Err)
    }
}
