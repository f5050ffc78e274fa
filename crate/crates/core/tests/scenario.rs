// SPDX-License-Identifier: Apache-2.0

use netwls::scenario::{export_plot_data, export_trace_csv, parse_scenario, render_scenario, LOOPY13_UNOBSERVED};
use netwls::{
    assemble_information, dwls_run, error_trace, generate, load_scenario, rate_bound, rate_envelope, save_scenario,
    solve_global, Dims, Error, OracleConfig, RunOptions, ScenarioSpec, Topology,
};
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = ScenarioSpec> {
    (
        prop_oneof![
            Just(Topology::Chain),
            Just(Topology::Star),
            Just(Topology::Tree),
            Just(Topology::Ring),
            Just(Topology::RandomConnected)
        ],
        3usize..30,
        any::<u64>(),
        1usize..4,
        0.05f64..=1.0,
    )
        .prop_map(|(t, n, seed, max, density)| {
            ScenarioSpec::new(t, n, seed).with_dims(Dims::Random { max }).with_self_density(density)
        })
}

#[test]
fn loopy13_layout() {
    let s = generate::<f64>(&ScenarioSpec::loopy13(1)).unwrap();
    let g = &s.graph;
    assert_eq!(g.node_count(), 13);
    assert_eq!(g.edge_count(), 16);
    assert!(!g.is_acyclic());
    for m in g.self_measurements() {
        assert_eq!(m.is_informative(), !LOOPY13_UNOBSERVED.contains(&m.node.0), "node {}", m.node);
    }
    assert!(render_scenario(&s).contains("# loopy13"));
}

#[test]
fn same_seed_same_bytes() {
    let spec = ScenarioSpec::new(Topology::RandomConnected, 14, 99).with_dims(Dims::Random { max: 3 });
    assert_eq!(render_scenario(&generate::<f64>(&spec).unwrap()), render_scenario(&generate::<f64>(&spec).unwrap()));
    let other = ScenarioSpec { seed: 100, ..spec };
    assert_ne!(render_scenario(&generate::<f64>(&spec).unwrap()), render_scenario(&generate::<f64>(&other).unwrap()));
}

#[test]
fn impossible_specs_fail_generation() {
    for spec in [
        ScenarioSpec::new(Topology::Chain, 0, 1),
        ScenarioSpec::new(Topology::Chain, 4, 1).with_self_density(0.1),
        ScenarioSpec::new(Topology::Ring, 2, 1),
        ScenarioSpec::new(Topology::Chain, 4, 1).with_dims(Dims::Uniform(0)),
        ScenarioSpec { nodes: 12, ..ScenarioSpec::loopy13(1) },
    ] {
        assert!(matches!(generate::<f64>(&spec), Err(Error::Generation(_))), "{spec:?}");
    }
}

#[test]
fn save_load_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("loopy.scn");
    let s = generate::<f64>(&ScenarioSpec::loopy13(3)).unwrap();
    save_scenario(&s, &path).unwrap();
    let back = load_scenario::<f64>(&path).unwrap();
    assert_eq!(back, s);
    assert!(back.truth.unwrap().reproduces(&back.graph));
}

#[test]
fn missing_file_reports_path() {
    let err = load_scenario::<f64>(std::path::Path::new("/nonexistent/x.scn")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/x.scn"), "{err}");
}

#[test]
fn all_unobserved_file_parses_but_cannot_be_solved() {
    let text =
        "netwls-scenario 1\nnodes 2\ndim 1 1\ndim 2 1\nedge 1 2\n  Bij 1 1 1\n  Bji 1 1 1\n  R 1 1 1\n  z 1 0.5\nend\n";
    let s = parse_scenario::<f64>(text).unwrap();
    let info = assemble_information(&s.graph).unwrap();
    assert!(matches!(solve_global(&info, &OracleConfig::default()), Err(Error::Unidentifiable)));
}

#[test]
fn loopy13_csv_carries_both_curves() {
    let s = generate::<f64>(&ScenarioSpec::loopy13(1)).unwrap();
    let info = assemble_information(&s.graph).unwrap();
    let sol = solve_global(&info, &OracleConfig::default()).unwrap();
    let bound = rate_bound(&info, &OracleConfig::default()).unwrap();
    let trace = dwls_run(&info, &RunOptions::fixed(60)).unwrap();
    let err = error_trace(&trace, &sol, 1e-9).unwrap();
    let env = rate_envelope(&err, &bound).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("trace.csv");
    export_trace_csv(&trace, &err, Some(&env), &csv_path).unwrap();
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["round", "node_id", "est_1", "abs_error", "y1", "bound_envelope"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 13 * 61);
    assert_eq!(&rows[13][0], "1");
    assert_eq!(&rows[13][1], "1");
    let first_bound: f64 = rows[0][5].parse().unwrap();
    assert!((first_bound - env.c).abs() <= 1e-12 * env.c);

    let plot_path = dir.path().join("fig.dat");
    export_plot_data(&err, Some(&env), &plot_path).unwrap();
    let plot = std::fs::read_to_string(&plot_path).unwrap();
    assert_eq!(plot.lines().count(), 1 + 61);
    assert_eq!(plot.lines().nth(1).unwrap().split_whitespace().count(), 3);

    let bad = dir.path().join("missing-dir").join("trace.csv");
    let e = export_trace_csv(&trace, &err, None, &bad).unwrap_err();
    assert!(e.to_string().contains("missing-dir"), "{e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn generated_scenarios_are_identifiable_and_consistent(spec in spec_strategy()) {
        prop_assume!((spec.self_density * spec.nodes as f64).round() >= 1.0);
        let s = generate::<f64>(&spec).unwrap();
        prop_assert!(s.graph.is_connected());
        prop_assert!(s.graph.self_measurements().iter().any(|m| m.is_informative()));
        prop_assert!(s.truth.as_ref().unwrap().reproduces(&s.graph));
        let info = assemble_information(&s.graph).unwrap();
        prop_assert!(solve_global(&info, &OracleConfig::default()).is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn text_round_trip_is_lossless(spec in spec_strategy()) {
        prop_assume!((spec.self_density * spec.nodes as f64).round() >= 1.0);
        let s = generate::<f64>(&spec).unwrap();
        let text = render_scenario(&s);
        let back = parse_scenario::<f64>(&text).unwrap();
        prop_assert_eq!(&back, &s);
        let opts = RunOptions::fixed(10);
        let a = dwls_run(&assemble_information(&s.graph).unwrap(), &opts).unwrap();
        let b = dwls_run(&assemble_information(&back.graph).unwrap(), &opts).unwrap();
        prop_assert_eq!(a, b);
    }
}
