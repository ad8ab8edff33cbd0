//! Minimizes a small transition system and prints its classes.

use pvccs::calculus::{Action, Value};
use pvccs::graph::{minimize, Lts, LtsEdge};

fn main() {
    let a = Action::output("a", Value::Int(1));
    let b = Action::output("b", Value::Int(1));
    let e = |source, action: &Action, prob, target| LtsEdge { source, action: action.clone(), prob, target };
    // q0 does a then b; q1 does a with two half-weight branches, each then b.
    // q5 loops on a; q6 and q7 alternate on a.
    let lts = Lts::from_edges(
        8,
        vec![
            e(0, &a, 1.0, 2),
            e(1, &a, 0.5, 3),
            e(1, &a, 0.5, 4),
            e(2, &b, 1.0, 5),
            e(3, &b, 1.0, 5),
            e(4, &b, 1.0, 5),
            e(5, &a, 1.0, 5),
            e(6, &a, 1.0, 7),
            e(7, &a, 1.0, 6),
        ],
        vec![0, 1],
    );
    let q = minimize(&lts);
    println!("{} nodes, {} classes", lts.len(), q.classes.len());
    for (i, c) in q.classes.iter().enumerate() {
        let names: Vec<String> = c.iter().map(|n| format!("q{n}")).collect();
        println!("class {i}: {}", names.join(" ~ "));
    }
    print!("{}", q.lts.to_dot());
}
