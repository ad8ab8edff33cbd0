//! Compiles the campus fixture, solves it and verifies every strategy found.

use pvccs::graph::{compile, CompileOptions};
use pvccs::scenario::Scenario;
use pvccs::solver::{find_nes, stratify, verify_nes, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = Scenario::from_json(include_str!("../data/campus.json"))?;
    let c = compile(&sc, CompileOptions::default())?;
    println!(
        "lts {} nodes, quotient {} classes, secmodel {} vertices {} edges",
        c.lts.len(),
        c.quotient.lts.len(),
        c.model.vertices.len(),
        c.model.edges.len()
    );
    for d in &c.diagnostics {
        println!("diagnostic {d}");
    }
    let cond = stratify(&c.model);
    for cl in &cond.clusters {
        let names: Vec<&str> = cl.vertices.iter().map(|&v| c.model.vertices[v].id.as_str()).collect();
        println!("cluster {:?} {:?}", names, cl.kind);
    }
    let cfg = SolverConfig::default();
    let r = find_nes(&c.model, &sc, &cfg)?;
    println!("{} strategies after {} iterations", r.strategies.len(), r.iterations);
    for s in &r.strategies {
        println!("verify: {}", verify_nes(&r.model, s, &cfg).describe(&r.model));
        for e in s.entries(&r.model, &cfg) {
            println!(
                "  {} -({},{})-> {}  ({:.4}, {:.4})",
                e.vertex, e.u, e.v, e.target, e.user_payoff, e.defender_payoff
            );
        }
    }
    Ok(())
}
