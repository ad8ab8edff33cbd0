use pvccs::cases::{campus_scenario, ddos_params, ddos_sweep, evaluate, DdosSweep, UserType};
use pvccs::graph::{compile, CompileOptions};
use pvccs::solver::{bay_exp, enumerate_strategies, find_nes, stratify, verify_nes, ClusterKind, SolverConfig};

#[test]
fn campus_compiles_to_the_expected_structure() {
    let c = compile(&campus_scenario(), CompileOptions::default()).unwrap();
    assert_eq!(c.model.vertices.len(), 8);
    let ids: Vec<&str> = c.model.vertices.iter().map(|v| v.id.as_str()).collect();
    for s in ["s1", "s2", "s3", "s4", "s5", "s6", "s_other"] {
        assert!(ids.contains(&s), "{s}");
    }
    // The action-less states are bisimilar and share a vertex.
    let sink = c.model.vertices.iter().find(|v| v.members.len() > 1).unwrap();
    assert_eq!(sink.members, ["s7", "s8", "s9"]);
    // s5 act=(1,3) moves to s7 with 0.8, the rest to unpublished states.
    let s5 = c.model.vertex_index("s5").unwrap();
    let e = c
        .model
        .edges
        .iter()
        .find(|e| {
            e.source == s5 && e.label.user == "1" && e.label.defender == "3" && c.model.vertices[e.target].id == sink.id
        })
        .unwrap();
    assert!((e.label.tran_p - 0.8).abs() < 1e-12);
    // s3 act=(1,1) moves to s4 with certainty.
    let (s3, s4) = (c.model.vertex_index("s3").unwrap(), c.model.vertex_index("s4").unwrap());
    let e = c.model.edges.iter().find(|e| e.source == s3 && e.label.user == "1" && e.label.defender == "1").unwrap();
    assert_eq!((e.target, e.label.tran_p), (s4, 1.0));
}

#[test]
fn campus_s6_one_one_has_no_transition() {
    let c = compile(&campus_scenario(), CompileOptions::default()).unwrap();
    let s6 = c.model.vertex_index("s6").unwrap();
    assert!(!c.model.edges.iter().any(|e| e.source == s6 && e.label.user == "1" && e.label.defender == "1"));
    assert!(c.diagnostics.iter().any(|d| d.vertex == "s6" && d.trace.iter().any(|t| t.contains('1'))));
}

#[test]
fn campus_clusters_put_the_sink_first() {
    let c = compile(&campus_scenario(), CompileOptions::default()).unwrap();
    let cond = stratify(&c.model);
    assert_eq!(cond.clusters.len(), 3);
    assert_eq!(cond.clusters[0].kind, ClusterKind::Leave);
    assert_eq!(cond.clusters[1].kind, ClusterKind::Leave);
    assert_eq!(cond.clusters[2].kind, ClusterKind::NonLeave);
    assert_eq!(cond.clusters[2].vertices.len(), 6);
}

#[test]
fn campus_solver_agrees_with_exhaustive_verification() {
    let sc = campus_scenario();
    let c = compile(&sc, CompileOptions::default()).unwrap();
    let cfg = SolverConfig { max_strategies: 1_000_000, ..SolverConfig::default() };
    let found = find_nes(&c.model, &sc, &cfg).unwrap().strategies;
    let m = bay_exp(&c.model, &sc).unwrap();
    let all = enumerate_strategies(&m, cfg.max_strategies).unwrap();
    let product: usize = (0..m.vertices.len()).map(|v| m.out_edges(v, &m.types[0]).len().max(1)).product();
    assert_eq!(all.len(), product);
    assert_eq!(product, 312_000);
    let passing: Vec<_> = all.into_iter().filter(|s| verify_nes(&m, s, &cfg).is_pass()).collect();
    assert_eq!(found, passing);
}

#[test]
fn campus_solution_is_deterministic() {
    let sc = campus_scenario();
    let c = compile(&sc, CompileOptions::default()).unwrap();
    let cfg = SolverConfig::default();
    let a = serde_json::to_string(&find_nes(&c.model, &sc, &cfg).unwrap().document(&cfg)).unwrap();
    let b = serde_json::to_string(&find_nes(&c.model, &sc, &cfg).unwrap().document(&cfg)).unwrap();
    assert_eq!(a, b);
    assert_eq!(c.model.to_dot(), compile(&sc, CompileOptions::default()).unwrap().model.to_dot());
}

#[test]
fn ddos_reference_points_match_the_published_values() {
    let p = ddos_params();
    let r = evaluate(&p, UserType::Regular, 8, 100.0, 228.8);
    assert!((r.drop - 0.2162).abs() < 1e-3);
    assert!((r.payoff_user - 1639.84).abs() < 1.0);
    let z = evaluate(&p, UserType::Zombie, 20, 250.0, 322.0);
    assert!((z.drop - 0.3274).abs() < 1e-3);
    assert!((z.f_z - 1500.83).abs() < 1.0);
    assert!((z.f_l - 619.35).abs() < 1.0);
    assert_eq!(z.f_c, 200.0);
}

#[test]
fn ddos_sweep_is_deterministic_and_complete() {
    let p = ddos_params();
    let cfg = SolverConfig::default();
    let a = ddos_sweep(&p, &cfg).unwrap();
    let b = ddos_sweep(&p, &cfg).unwrap();
    let csv = a.to_csv();
    assert_eq!(csv, b.to_csv());
    assert!(csv.starts_with(DdosSweep::CSV_HEADER));
    assert_eq!(csv.lines().count(), a.rows.len() + 1);
    // 6001 Mp values times (18 + 20) divisor pairs of 800 and 5000.
    assert_eq!(a.rows.len(), 6001 * 38);
}

#[test]
fn ddos_user_payoff_rises_with_mp() {
    // The reason no grid point is an equilibrium: at a fixed (m_u, r_u) the
    // user's payoff strictly increases with the drop threshold, so the user
    // always prefers the largest Mp the defender could pick.
    let p = ddos_params();
    for (ty, m_u, r_u) in [(UserType::Regular, 8, 100.0), (UserType::Zombie, 20, 250.0)] {
        let mut last = f64::NEG_INFINITY;
        for k in 0..=60 {
            let x = evaluate(&p, ty, m_u, r_u, 10.0 * k as f64).payoff_user;
            assert!(x > last);
            last = x;
        }
    }
}
