//! Builds a two-state scenario in code, solves it and verifies the result.

use pvccs::graph::{compile, CompileOptions};
use pvccs::scenario::Scenario;
use pvccs::solver::{find_nes, verify_nes, SolverConfig};

const TOY: &str = r#"{
  "types": [{"id": "attacker", "prior": 0.7}, {"id": "tester", "prior": 0.3}],
  "states": ["ok", "breached"],
  "user_actions": {
    "ok": {"attacker": ["probe", "wait"], "tester": ["probe", "wait"]},
    "breached": {"attacker": ["exfil"], "tester": ["report"]}
  },
  "defender_actions": {"ok": ["watch", "block"], "breached": ["restore"]},
  "transitions": [
    {"s": "ok", "t": "attacker", "u": "probe", "v": "watch", "s2": "breached", "p": 1},
    {"s": "ok", "t": "attacker", "u": "probe", "v": "block", "s2": "ok", "p": 1},
    {"s": "ok", "t": "attacker", "u": "wait", "v": "watch", "s2": "ok", "p": 1},
    {"s": "ok", "t": "attacker", "u": "wait", "v": "block", "s2": "ok", "p": 1},
    {"s": "ok", "t": "tester", "u": "probe", "v": "watch", "s2": "breached", "p": 1},
    {"s": "ok", "t": "tester", "u": "probe", "v": "block", "s2": "ok", "p": 1},
    {"s": "ok", "t": "tester", "u": "wait", "v": "watch", "s2": "ok", "p": 1},
    {"s": "ok", "t": "tester", "u": "wait", "v": "block", "s2": "ok", "p": 1},
    {"s": "breached", "t": "attacker", "u": "exfil", "v": "restore", "s2": "ok", "p": 1},
    {"s": "breached", "t": "tester", "u": "report", "v": "restore", "s2": "ok", "p": 1}
  ],
  "payoffs": [
    {"s": "ok", "t": "attacker", "u": "probe", "v": "watch", "ru": 1, "rd": -3},
    {"s": "ok", "t": "attacker", "u": "probe", "v": "block", "ru": -2, "rd": 1},
    {"s": "ok", "t": "attacker", "u": "wait", "v": "watch", "ru": 1, "rd": 0},
    {"s": "ok", "t": "attacker", "u": "wait", "v": "block", "ru": 0, "rd": -1},
    {"s": "ok", "t": "tester", "u": "probe", "v": "watch", "ru": 1, "rd": 2},
    {"s": "ok", "t": "tester", "u": "probe", "v": "block", "ru": 0, "rd": -1},
    {"s": "ok", "t": "tester", "u": "wait", "v": "watch", "ru": 1, "rd": 0},
    {"s": "ok", "t": "tester", "u": "wait", "v": "block", "ru": 0, "rd": -1},
    {"s": "breached", "t": "attacker", "u": "exfil", "v": "restore", "ru": 0, "rd": -5},
    {"s": "breached", "t": "tester", "u": "report", "v": "restore", "ru": 0, "rd": 1}
  ]
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = Scenario::from_json(TOY)?;
    let c = compile(&sc, CompileOptions::default())?;
    print!("{}", c.model.to_dot());
    let cfg = SolverConfig::default();
    let r = find_nes(&c.model, &sc, &cfg)?;
    println!("{} strategies", r.strategies.len());
    for (i, s) in r.strategies.iter().enumerate() {
        println!("strategy {i}: {}", verify_nes(&r.model, s, &cfg).describe(&r.model));
        for e in s.entries(&r.model, &cfg) {
            println!(
                "  {} {}: ({},{}) -> {}  user {:.3} defender {:.3}",
                e.vertex, e.ty, e.u, e.v, e.target, e.user_payoff, e.defender_payoff
            );
        }
    }
    Ok(())
}
