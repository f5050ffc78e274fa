// SPDX-License-Identifier: Apache-2.0

// Acceptance gate. Runs without the libtest harness so every criterion
// prints exactly one PASS/FAIL line; the process exits non-zero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::time::Instant;

use nalgebra::DMatrix;
use netwls::analysis::TraceDetail;
use netwls::scenario::{parse_scenario, render_scenario, write_trace_csv};
use netwls::{
    assemble_information, comparison_matrix, dominance_certificate, dwls_run, equivalence_audit, error_trace, gbp_run,
    generate, load_scenario, rate_bound, rate_envelope, save_scenario, solve_global, Dims, OracleConfig, RunOptions,
    Scenario, ScenarioSpec, StopReason, Topology,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn scenario(spec: &ScenarioSpec) -> Scenario<f64> {
    generate(spec).unwrap_or_else(|e| panic!("generation failed for {spec:?}: {e}"))
}

fn oracle_equivalence() -> Outcome {
    let mut specs = Vec::new();
    for k in 0..100u64 {
        specs.push(ScenarioSpec::new(Topology::RandomConnected, 3 + (k as usize * 7) % 28, 1000 + k));
    }
    for k in 0..20u64 {
        let topo = if k % 2 == 0 { Topology::RandomConnected } else { Topology::Tree };
        specs.push(ScenarioSpec::new(topo, 3 + (k as usize * 5) % 18, 2000 + k).with_dims(Dims::Random { max: 3 }));
    }
    let mut worst = 0.0f64;
    for spec in &specs {
        let s = scenario(spec);
        let info = assemble_information(&s.graph).map_err(|e| e.to_string())?;
        let sol = solve_global(&info, &OracleConfig::default()).map_err(|e| format!("{spec:?}: {e}"))?;
        let reference: Vec<f64> = common::dense_ls(&s.graph).iter().copied().collect();
        let rel = common::max_abs_diff(&sol.flat(), &reference) / common::max_abs(&reference).max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        if rel > 1e-10 {
            return Err(format!("seed {} (n={}): relative gap {rel:.3e}", spec.seed, spec.nodes));
        }
    }
    Ok(format!("{} instances, worst relative gap {worst:.2e} <= 1e-10", specs.len()))
}

fn engine_equivalence() -> Outcome {
    let topologies = [Topology::Chain, Topology::Star, Topology::Tree, Topology::Ring, Topology::RandomConnected];
    let mut worst = 0.0f64;
    let mut cyclic = 0;
    let mut vector = 0;
    for k in 0..50u64 {
        let topo = topologies[k as usize % topologies.len()];
        let dims = if k % 2 == 0 { Dims::Uniform(1) } else { Dims::Random { max: 3 } };
        let spec = ScenarioSpec::new(topo, 4 + (k as usize * 3) % 17, 3000 + k).with_dims(dims);
        let s = scenario(&spec);
        cyclic += usize::from(!s.graph.is_acyclic());
        vector += usize::from(!s.graph.is_scalar());
        let info = assemble_information(&s.graph).map_err(|e| e.to_string())?;
        let detail = TraceDetail { precisions: true, messages: false };
        let d = dwls_run(&info, &RunOptions::fixed(30).with_detail(detail)).map_err(|e| e.to_string())?;
        let g = gbp_run(&info, &RunOptions::fixed(31).with_detail(detail)).map_err(|e| e.to_string())?;
        for t in [&d, &g] {
            if let StopReason::Breakdown(b) = t.stop {
                return Err(format!("seed {}: {b}", spec.seed));
            }
        }
        let report = equivalence_audit(&d, &g, 1e-10).map_err(|e| e.to_string())?;
        if report.rounds.len() != 31 || report.max_precision.is_none() {
            return Err(format!("seed {}: incomplete comparison", spec.seed));
        }
        worst = worst.max(report.max_discrepancy());
        if !report.pass {
            return Err(format!(
                "seed {}: round {:?} discrepancy {:.3e}",
                spec.seed,
                report.first_failure,
                report.max_discrepancy()
            ));
        }
    }
    Ok(format!("50 instances ({cyclic} cyclic, {vector} vector), 31 rounds each, worst {worst:.2e} <= 1e-10"))
}

fn tree_exactness() -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..50u64 {
        let spec =
            ScenarioSpec::new(Topology::Tree, 2 + (k as usize * 11) % 39, 4000 + k).with_dims(Dims::Random { max: 3 });
        let s = scenario(&spec);
        let g = &s.graph;
        let diameter = g.diameter().map_err(|e| e.to_string())?;
        let ecc = g.eccentricities().map_err(|e| e.to_string())?;
        let info = assemble_information(g).map_err(|e| e.to_string())?;
        let sol = solve_global(&info, &OracleConfig::default()).map_err(|e| e.to_string())?;
        let trace = dwls_run(&info, &RunOptions::fixed(diameter.max(1))).map_err(|e| e.to_string())?;
        let scale = 1.0 + sol.flat().iter().map(|v| v * v).sum::<f64>().sqrt();
        let tol = 1e-9 * scale;
        let node_err = |round: usize, i: usize| {
            let est = &trace.round(round).expect("recorded round").estimates[i];
            common::max_abs_diff(est, &sol.x_star[i])
        };
        let at_d = (0..g.node_count()).map(|i| node_err(diameter, i)).fold(0.0, f64::max);
        worst = worst.max(at_d / scale);
        if at_d > tol {
            return Err(format!("seed {}: error {at_d:.3e} at round d = {diameter}", spec.seed));
        }
        for (i, &e) in ecc.iter().enumerate() {
            let err = node_err(e, i);
            if err > tol {
                return Err(format!("seed {}: node {} error {err:.3e} at its eccentricity {e}", spec.seed, i + 1));
            }
        }
    }
    Ok(format!("50 trees exact at round d and per-node eccentricity, worst {worst:.2e} (relative)"))
}

fn comparison_matrix_dominance() -> Outcome {
    let topologies = [Topology::RandomConnected, Topology::Tree, Topology::Ring, Topology::Chain, Topology::Star];
    let mut min_eig = f64::INFINITY;
    let mut min_margin = f64::INFINITY;
    for k in 0..200u64 {
        let topo = topologies[k as usize % topologies.len()];
        let density = [0.2, 0.5, 1.0][k as usize % 3];
        let spec = ScenarioSpec::new(topo, 3 + (k as usize * 13) % 38, 5000 + k).with_self_density(density);
        let s = scenario(&spec);
        let info = assemble_information(&s.graph).map_err(|e| e.to_string())?;
        let bar = comparison_matrix(&info).map_err(|e| e.to_string())?;
        let eig = common::min_eigenvalue(&common::to_na(&bar));
        let cert = dominance_certificate(&info).map_err(|e| e.to_string())?;
        let (Some(d), Some(margin)) = (cert.d_scaling, cert.strictness_margin) else {
            return Err(format!("seed {}: no dominance witness (pd = {})", spec.seed, cert.is_pd));
        };
        if !(eig > 0.0) || d.iter().any(|&v| !(v > 0.0)) || !(margin > 0.0) {
            return Err(format!("seed {}: min eig {eig:.3e}, margin {margin:.3e}", spec.seed));
        }
        min_eig = min_eig.min(eig);
        min_margin = min_margin.min(margin);
    }
    Ok(format!("200 instances, min eigenvalue {min_eig:.3e} > 0, min margin {min_margin:.3e} > 0"))
}

fn cyclic_scalar() -> Outcome {
    let mut worst_rounds = 0;
    let mut max_rho = 0.0f64;
    let mut max_excess = f64::NEG_INFINITY;
    for k in 0..50u64 {
        let spec = ScenarioSpec::new(Topology::RandomConnected, 4 + (k as usize * 9) % 27, 6000 + k);
        let s = scenario(&spec);
        if s.graph.is_acyclic() {
            return Err(format!("seed {}: generated graph is acyclic", spec.seed));
        }
        let info = assemble_information(&s.graph).map_err(|e| e.to_string())?;
        let config = OracleConfig::default();
        let sol = solve_global(&info, &config).map_err(|e| e.to_string())?;
        let bound = rate_bound(&info, &config).map_err(|e| e.to_string())?;
        let trace = dwls_run(&info, &RunOptions::fixed(500)).map_err(|e| e.to_string())?;
        if let StopReason::Breakdown(b) = trace.stop {
            return Err(format!("seed {}: {b}", spec.seed));
        }
        let err = error_trace(&trace, &sol, 1e-8).map_err(|e| e.to_string())?;
        let Some(hit) = err.max_error.iter().position(|&e| e < 1e-8) else {
            return Err(format!("seed {}: error never below 1e-8 in 500 rounds", spec.seed));
        };
        if !(bound.rho < 1.0) {
            return Err(format!("seed {}: rho = {}", spec.seed, bound.rho));
        }
        let env = rate_envelope(&err, &bound).map_err(|e| e.to_string())?;
        if !env.pass {
            return Err(format!("seed {}: rate {:.4} > rho {:.4} + 0.05", spec.seed, env.rate_hat, bound.rho));
        }
        worst_rounds = worst_rounds.max(err.rounds[hit]);
        max_rho = max_rho.max(bound.rho);
        max_excess = max_excess.max(env.rate_hat - bound.rho);
    }
    Ok(format!(
        "50 cyclic instances: below 1e-8 by round {worst_rounds}, max rho {max_rho:.4} < 1, max (rate - rho) {max_excess:.4} <= 0.05"
    ))
}

fn loopy13() -> Outcome {
    let s = scenario(&ScenarioSpec::loopy13(1));
    let g = &s.graph;
    let info = assemble_information(g).map_err(|e| e.to_string())?;
    let unobserved: Vec<usize> =
        g.self_measurements().iter().filter(|m| !m.is_informative()).map(|m| m.node.0).collect();
    if g.node_count() != 13 || g.is_acyclic() || unobserved != [2, 5] {
        return Err(format!("unexpected layout: unobserved {unobserved:?}"));
    }
    let config = OracleConfig::default();
    let sol = solve_global(&info, &config).map_err(|e| e.to_string())?;
    let bound = rate_bound(&info, &config).map_err(|e| e.to_string())?;
    let trace = dwls_run(&info, &RunOptions::fixed(500)).map_err(|e| e.to_string())?;
    let err = error_trace(&trace, &sol, 1e-9).map_err(|e| e.to_string())?;
    let env = rate_envelope(&err, &bound).map_err(|e| e.to_string())?;
    let final_y1 = err.final_y1().unwrap_or(f64::NAN);
    let below = err.y1.iter().position(|&y| y < -8.0).map(|k| err.rounds[k]);
    let slope = env.y1_slope.unwrap_or(f64::NEG_INFINITY);
    let summary = format!(
        "rho {:.4}, C {:.3e}, y1 < -8 from round {below:?} (final {final_y1:.2}), rate {:.4}, y1 slope {slope:.4} vs bound {:.4}",
        bound.rho, env.c, env.rate_hat, env.bound_y1_slope
    );
    if !(final_y1 < -8.0) {
        return Err(format!("y1 did not fall below -8: {summary}"));
    }
    if !env.holds_everywhere {
        return Err(format!("envelope violated: {summary}"));
    }
    if !(env.faster_than_bound() && slope < env.bound_y1_slope) {
        return Err(format!("decay not faster than rho: {summary}"));
    }
    Ok(summary)
}

fn determinism() -> Outcome {
    let specs = [
        ScenarioSpec::loopy13(1),
        ScenarioSpec::new(Topology::RandomConnected, 12, 77).with_dims(Dims::Random { max: 3 }),
        ScenarioSpec::new(Topology::Tree, 9, 78),
    ];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (k, spec) in specs.iter().enumerate() {
        let a = scenario(spec);
        let b = scenario(spec);
        if render_scenario(&a) != render_scenario(&b) {
            return Err(format!("seed {}: scenario bytes differ", spec.seed));
        }
        let csv_of = |s: &Scenario<f64>| -> Result<Vec<u8>, String> {
            let info = assemble_information(&s.graph).map_err(|e| e.to_string())?;
            let sol = solve_global(&info, &OracleConfig::default()).map_err(|e| e.to_string())?;
            let trace = dwls_run(&info, &RunOptions::new(200, 1e-12)).map_err(|e| e.to_string())?;
            let err = error_trace(&trace, &sol, 1e-9).map_err(|e| e.to_string())?;
            let mut buf = Vec::new();
            write_trace_csv(&trace, &err, None, &mut buf).map_err(|e| e.to_string())?;
            Ok(buf)
        };
        if csv_of(&a)? != csv_of(&b)? {
            return Err(format!("seed {}: trace CSVs differ", spec.seed));
        }

        let path = dir.path().join(format!("s{k}.scn"));
        save_scenario(&a, &path).map_err(|e| e.to_string())?;
        let loaded: Scenario<f64> = load_scenario(&path).map_err(|e| e.to_string())?;
        if loaded != a || parse_scenario::<f64>(&render_scenario(&loaded)).map_err(|e| e.to_string())? != a {
            return Err(format!("seed {}: load(save(s)) differs from s", spec.seed));
        }
        let original = assemble_information(&a.graph).map_err(|e| e.to_string())?;
        let reloaded = assemble_information(&loaded.graph).map_err(|e| e.to_string())?;
        let opts = RunOptions::fixed(40).with_detail(TraceDetail::full());
        let same_dwls = dwls_run(&original, &opts).map_err(|e| e.to_string())?
            == dwls_run(&reloaded, &opts).map_err(|e| e.to_string())?;
        let same_gbp = gbp_run(&original, &opts).map_err(|e| e.to_string())?
            == gbp_run(&reloaded, &opts).map_err(|e| e.to_string())?;
        if !(same_dwls && same_gbp) {
            return Err(format!("seed {}: engine output differs after reload", spec.seed));
        }
    }
    Ok("identical scenario bytes and CSVs per seed; reloaded scenarios give identical dwls/gbp traces".into())
}

fn main() {
    // Sanity check on the reference itself before trusting it.
    let m = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
    assert!((common::min_eigenvalue(&m) - 1.0).abs() < 1e-14);

    let criteria: [Criterion; 7] = [
        ("1 oracle matches dense least squares", oracle_equivalence),
        ("2 dwls/gbp round-shifted equivalence", engine_equivalence),
        ("3 acyclic exactness at diameter and eccentricity", tree_exactness),
        ("4 comparison matrix PD with dominance witness", comparison_matrix_dominance),
        ("5 cyclic scalar convergence and rate", cyclic_scalar),
        ("6 loopy13 decay under the rho envelope", loopy13),
        ("7 determinism and round-trip", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail} [{secs:.2}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail} [{secs:.2}s]");
            }
        }
    }
    println!("acceptance: {} of 7 criteria passed", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
