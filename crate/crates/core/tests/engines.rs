// SPDX-License-Identifier: Apache-2.0

mod common;

use netwls::{
    assemble_information, dwls_run, error_trace, gbp_run, generate, rate_bound, rate_envelope, solve_global, Dims,
    DwlsEngine, Error, GraphBuilder, Matrix, OracleConfig, RunOptions, ScenarioSpec, StopReason, Topology,
};

fn solved(spec: &ScenarioSpec) -> (netwls::Info, netwls::Solution) {
    let s = generate::<f64>(spec).unwrap();
    let info = assemble_information(&s.graph).unwrap();
    let sol = solve_global(&info, &OracleConfig::default()).unwrap();
    (info, sol)
}

fn worst_error(estimates: &[Vec<f64>], sol: &netwls::Solution) -> f64 {
    estimates.iter().zip(&sol.x_star).map(|(a, b)| common::max_abs_diff(a, b)).fold(0.0, f64::max)
}

#[test]
fn star_is_exact_after_two_rounds() {
    let (info, sol) = solved(&ScenarioSpec::new(Topology::Star, 8, 5));
    let trace = dwls_run(&info, &RunOptions::fixed(2)).unwrap();
    let err = worst_error(trace.final_estimates().unwrap(), &sol);
    assert!(err < 1e-10 * (1.0 + sol.max_abs()), "{err}");
    // one round is not enough for leaves to hear from each other
    let early = worst_error(&trace.round(1).unwrap().estimates, &sol);
    assert!(early > 1e-6);
}

#[test]
fn gbp_tree_exact_one_round_after_diameter() {
    let spec = ScenarioSpec::new(Topology::Tree, 15, 9).with_dims(Dims::Random { max: 3 });
    let s = generate::<f64>(&spec).unwrap();
    let d = s.graph.diameter().unwrap();
    let info = assemble_information(&s.graph).unwrap();
    let sol = solve_global(&info, &OracleConfig::default()).unwrap();
    let trace = gbp_run(&info, &RunOptions::fixed(d + 1)).unwrap();
    assert_eq!(trace.rounds.first().unwrap().round, 1);
    let err = worst_error(trace.final_estimates().unwrap(), &sol);
    assert!(err < 1e-9 * (1.0 + sol.max_abs()), "{err}");
}

#[test]
fn tolerance_stops_the_run_early() {
    let (info, sol) = solved(&ScenarioSpec::new(Topology::RandomConnected, 12, 4));
    let trace = dwls_run(&info, &RunOptions::new(500, 1e-11)).unwrap();
    assert_eq!(trace.stop, StopReason::Converged);
    assert!(trace.rounds_executed() < 500);
    assert!(worst_error(trace.final_estimates().unwrap(), &sol) < 1e-8);

    let capped = dwls_run(&info, &RunOptions::fixed(3)).unwrap();
    assert_eq!(capped.stop, StopReason::MaxRounds);
    assert_eq!(capped.rounds.len(), 4);
}

#[test]
fn parallel_rounds_match_sequential_bitwise() {
    let spec = ScenarioSpec::new(Topology::RandomConnected, 25, 8).with_dims(Dims::Random { max: 3 });
    let (info, _) = solved(&spec);
    let seq = RunOptions::fixed(30);
    let par = RunOptions::fixed(30).with_parallel(true);
    assert_eq!(dwls_run(&info, &seq).unwrap(), dwls_run(&info, &par).unwrap());
    assert_eq!(gbp_run(&info, &seq).unwrap(), gbp_run(&info, &par).unwrap());
}

#[test]
fn cyclic_rate_within_bound() {
    let (info, sol) = solved(&ScenarioSpec::new(Topology::RandomConnected, 16, 21).with_extra_edges(6));
    let bound = rate_bound(&info, &OracleConfig::default()).unwrap();
    let trace = dwls_run(&info, &RunOptions::fixed(300)).unwrap();
    let err = error_trace(&trace, &sol, 1e-9).unwrap();
    let env = rate_envelope(&err, &bound).unwrap();
    assert!(bound.rho < 1.0);
    assert!(env.holds_everywhere);
    assert!(env.rate_hat <= bound.rho + 0.05, "{} vs {}", env.rate_hat, bound.rho);
}

#[test]
fn rank_deficient_local_block_is_rejected() {
    // node 2 has two state components but only one scalar edge row touching it
    let g = GraphBuilder::new(vec![1, 2])
        .self_measurement(1, Matrix::scalar(1.0), Matrix::scalar(1.0), vec![0.0])
        .edge(1, 2, Matrix::scalar(1.0), Matrix::from_row_slice(1, 2, &[1.0, 1.0]), Matrix::scalar(1.0), vec![1.0])
        .build()
        .unwrap();
    let info = assemble_information(&g).unwrap();
    assert!(matches!(DwlsEngine::new(&info), Err(Error::LocallyUnidentifiable { .. })));
    assert!(dwls_run(&info, &RunOptions::fixed(3)).is_err());
}

#[test]
fn invalid_options_are_rejected() {
    let (info, _) = solved(&ScenarioSpec::new(Topology::Chain, 3, 1));
    assert!(matches!(dwls_run(&info, &RunOptions::fixed(0)), Err(Error::InvalidInput(_))));
    assert!(matches!(gbp_run(&info, &RunOptions::new(5, -1.0)), Err(Error::InvalidInput(_))));
}

#[test]
fn single_precision_tracks_double() {
    let spec = ScenarioSpec::loopy13(1);
    let s32 = generate::<f32>(&spec).unwrap();
    let info32 = assemble_information(&s32.graph).unwrap();
    let trace32 = dwls_run(&info32, &RunOptions::fixed(60)).unwrap();
    let (_, sol) = solved(&spec);
    let last = trace32.final_estimates().unwrap();
    let widened: Vec<Vec<f64>> = last.iter().map(|x| x.iter().map(|&v| v as f64).collect()).collect();
    let err = worst_error(&widened, &sol);
    assert!(err < 1e-3 * (1.0 + sol.max_abs()), "{err}");
}
