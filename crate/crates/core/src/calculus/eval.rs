use std::collections::BTreeMap;
use std::sync::Arc;

use super::syntax::{BoolExpr, Branch, Prefix, ProcessExpr, Value, ValueExpr};
use super::CalculusError;

pub type Binding = BTreeMap<String, Value>;

/// Evaluates a value expression under `binding`. Tuples evaluate componentwise.
pub fn eval_value(e: &ValueExpr, binding: &Binding) -> Result<Value, CalculusError> {
    match e {
        ValueExpr::Lit(v) => Ok(v.clone()),
        ValueExpr::Var(x) => binding.get(x).cloned().ok_or_else(|| CalculusError::UnboundVariable(x.clone())),
        ValueExpr::Tuple(items) => {
            items.iter().map(|i| eval_value(i, binding)).collect::<Result<Vec<_>, _>>().map(Value::Tuple)
        }
    }
}

pub fn eval_bool(b: &BoolExpr, binding: &Binding) -> Result<bool, CalculusError> {
    match b {
        BoolExpr::Lit(v) => Ok(*v),
        BoolExpr::Eq(l, r) => Ok(eval_value(l, binding)? == eval_value(r, binding)?),
        BoolExpr::And(items) => {
            for item in items {
                if !eval_bool(item, binding)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

fn subst_value(e: &ValueExpr, with: &ValueExpr, x: &str) -> ValueExpr {
    match e {
        ValueExpr::Var(y) if y == x => with.clone(),
        ValueExpr::Lit(_) | ValueExpr::Var(_) => e.clone(),
        ValueExpr::Tuple(items) => ValueExpr::Tuple(items.iter().map(|i| subst_value(i, with, x)).collect()),
    }
}

fn subst_bool(b: &BoolExpr, with: &ValueExpr, x: &str) -> BoolExpr {
    match b {
        BoolExpr::Lit(_) => b.clone(),
        BoolExpr::Eq(l, r) => BoolExpr::Eq(subst_value(l, with, x), subst_value(r, with, x)),
        BoolExpr::And(items) => BoolExpr::And(items.iter().map(|i| subst_bool(i, with, x)).collect()),
    }
}

/// `E{e/x}`: replaces every free occurrence of `x` in `E` by the closed
/// expression `e`. Occurrences bound by an input prefix `a(x)` are left alone;
/// since `e` is closed no capture can occur.
pub fn substitute(proc: &ProcessExpr, with: &ValueExpr, x: &str) -> ProcessExpr {
    match proc {
        ProcessExpr::Nil => ProcessExpr::Nil,
        ProcessExpr::Prefix(prefix, cont) => match prefix {
            Prefix::Input { var, .. } if var == x => proc.clone(),
            Prefix::Input { .. } | Prefix::Tau => {
                ProcessExpr::Prefix(prefix.clone(), Arc::new(substitute(cont, with, x)))
            }
            Prefix::Output { chan, expr } => ProcessExpr::Prefix(
                Prefix::Output { chan: chan.clone(), expr: subst_value(expr, with, x) },
                Arc::new(substitute(cont, with, x)),
            ),
        },
        ProcessExpr::Choice(branches) => ProcessExpr::Choice(Arc::new(
            branches.iter().map(|b| Branch { prob: b.prob, proc: substitute(&b.proc, with, x) }).collect(),
        )),
        ProcessExpr::Par(l, r) => ProcessExpr::Par(Arc::new(substitute(l, with, x)), Arc::new(substitute(r, with, x))),
        ProcessExpr::Restrict(p, chans) => ProcessExpr::Restrict(Arc::new(substitute(p, with, x)), chans.clone()),
        ProcessExpr::Relabel(p, f) => ProcessExpr::Relabel(Arc::new(substitute(p, with, x)), f.clone()),
        ProcessExpr::If(b, t, e) => {
            ProcessExpr::If(subst_bool(b, with, x), Arc::new(substitute(t, with, x)), Arc::new(substitute(e, with, x)))
        }
        ProcessExpr::Call(name, args) => {
            ProcessExpr::Call(name.clone(), args.iter().map(|a| subst_value(a, with, x)).collect())
        }
    }
}
