//! Derives the transitions of a few process terms, one per operator.

use std::collections::BTreeMap;

use pvccs::calculus::{derive_transitions, BoolExpr, DefEnv, ProcessExpr, Relabeling, Value, ValueExpr};

fn out(chan: &str, v: i64) -> ProcessExpr {
    ProcessExpr::output(chan, ValueExpr::int(v), ProcessExpr::nil())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut env = DefEnv::new();
    env.declare_domain("a", vec![Value::Int(1), Value::Int(2)]);
    env.define(
        "Clock",
        vec!["x".into()],
        ProcessExpr::output("tick", ValueExpr::var("x"), ProcessExpr::call("Clock", vec![ValueExpr::var("x")])),
    )?;
    let swap = Relabeling::new(BTreeMap::from([("a".into(), "b".into()), ("b".into(), "a".into())]))?;
    let terms = vec![
        ProcessExpr::choice(vec![(0.3, out("a", 1)), (0.7, out("a", 2))])?,
        ProcessExpr::input("a", "x", ProcessExpr::output("b", ValueExpr::var("x"), ProcessExpr::nil())),
        ProcessExpr::restrict(ProcessExpr::par(out("a", 1), ProcessExpr::input("a", "x", ProcessExpr::nil())), ["a"]),
        ProcessExpr::restrict(ProcessExpr::choice(vec![(0.5, out("a", 1)), (0.5, out("b", 2))])?, ["a"]),
        ProcessExpr::relabel(out("a", 1), swap),
        ProcessExpr::call("Clock", vec![ValueExpr::int(7)]),
        ProcessExpr::if_then_else(BoolExpr::eq(ValueExpr::int(1), ValueExpr::int(2)), out("a", 1), out("b", 2)),
    ];
    for t in terms {
        println!("{t}");
        for tr in derive_transitions(&t, &env)? {
            println!("  --{}[{}]--> {}", tr.action, tr.prob, tr.target);
        }
    }
    Ok(())
}
