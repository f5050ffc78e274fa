// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use netwls::analysis::TraceDetail;
use netwls::scenario::{export_plot_data, export_trace_csv};
use netwls::{
    assemble_information, dominance_certificate, dwls_run, equivalence_audit, error_trace, gbp_run, load_scenario,
    rate_bound, rate_envelope, save_scenario, solve_global, Algorithm, Error, Graph, Info, OracleConfig, RunOptions,
    Scenario, ScenarioSpec,
};

use crate::{AlgorithmArg, AnalyzeArgs, AuditArgs, RunArgs, EXIT_FAILURE};

fn load(path: &Path) -> Result<(Scenario<f64>, Info)> {
    let scenario: Scenario<f64> = load_scenario(path)?;
    let info = assemble_information(&scenario.graph)?;
    Ok((scenario, info))
}

fn shape(g: &Graph) -> String {
    let cyclic = if g.is_acyclic() { "acyclic" } else { "cyclic" };
    match g.diameter() {
        Ok(d) => format!("n={} edges={} diameter={d} {cyclic}", g.node_count(), g.edge_count()),
        Err(_) => format!("n={} edges={} disconnected", g.node_count(), g.edge_count()),
    }
}

fn y1_text(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf (exact to rounding)".into()
    } else {
        format!("{v:.3}")
    }
}

/// `trace.csv` -> `trace.dwls.csv` when several algorithms share a path.
fn tagged(path: &Path, alg: Algorithm) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{alg}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{alg}"),
    };
    path.with_file_name(name)
}

pub fn generate(spec: &ScenarioSpec, output: &Path) -> Result<ExitCode> {
    let scenario = netwls::generate::<f64>(spec)?;
    save_scenario(&scenario, output)?;
    println!("{}", shape(&scenario.graph));
    println!("wrote {}", output.display());
    Ok(ExitCode::SUCCESS)
}

pub fn run(args: &RunArgs) -> Result<ExitCode> {
    let (scenario, info) = load(&args.scenario)?;
    let g = &scenario.graph;
    let config = OracleConfig::default();
    let sol = solve_global(&info, &config).context("central solve failed; not iterating")?;
    println!("scenario: {} ({})", args.scenario.display(), shape(g));
    println!("oracle: solved, cond_1(Psi) = {:.3e}", sol.psi_condition);

    let bound = if info.is_scalar() && !g.is_acyclic() { Some(rate_bound(&info, &config)?) } else { None };
    let algorithms = match args.algorithm {
        AlgorithmArg::Dwls => vec![Algorithm::Dwls],
        AlgorithmArg::Gbp => vec![Algorithm::Gbp],
        AlgorithmArg::Both => vec![Algorithm::Dwls, Algorithm::Gbp],
    };
    let several = algorithms.len() > 1;
    let options = RunOptions::new(args.max_rounds as usize, args.tol).with_parallel(args.parallel);
    let hit_tol = args.tol * (1.0 + sol.max_abs());
    let mut failed = false;
    let mut dwls_rounds = 0;

    for alg in algorithms {
        let trace = match alg {
            Algorithm::Dwls => dwls_run(&info, &options)?,
            Algorithm::Gbp => gbp_run(&info, &options)?,
        };
        if alg == Algorithm::Dwls {
            dwls_rounds = trace.rounds_executed();
        }
        let err = error_trace(&trace, &sol, hit_tol)?;
        let envelope = bound.as_ref().map(|b| rate_envelope(&err, b)).transpose()?;

        let csv = match &args.csv {
            Some(p) if several => tagged(p, alg),
            Some(p) => p.clone(),
            None => args.scenario.with_extension(format!("{alg}.csv")),
        };
        export_trace_csv(&trace, &err, envelope.as_ref(), &csv)?;
        if let Some(p) = &args.plot {
            let plot = if several { tagged(p, alg) } else { p.clone() };
            export_plot_data(&err, envelope.as_ref(), &plot)?;
        }

        println!("{alg}: stop {} after {} rounds", trace.stop, trace.rounds_executed());
        if let Some(y1) = err.final_y1() {
            println!("{alg}: final y1 {}", y1_text(y1));
        }
        match (err.all_hit_round(), g.diameter()) {
            (Some(k), Ok(d)) if g.is_acyclic() => println!("{alg}: converged at round {k} (diameter {d})"),
            (Some(k), _) => println!("{alg}: converged at round {k}"),
            (None, _) => println!("{alg}: not within {hit_tol:.1e} of the central solution"),
        }
        if let (Some(b), Some(env)) = (&bound, &envelope) {
            println!("{alg}: rho(Omega_bar) {:.6}, fitted C {:.4e}", b.rho, env.c);
            println!(
                "{alg}: envelope {} at every round, observed rate {:.4}",
                if env.holds_everywhere { "holds" } else { "violated" },
                env.rate_hat
            );
        }
        println!("{alg}: trace written to {}", csv.display());
        if let Some(b) = trace.breakdown() {
            eprintln!("error: {alg}: {b}");
            failed = true;
        }
    }

    if several && !failed {
        let rounds = dwls_rounds.max(1);
        let detail = TraceDetail { precisions: true, messages: false };
        let d = dwls_run(&info, &RunOptions::fixed(rounds).with_detail(detail).with_parallel(args.parallel))?;
        let gb = gbp_run(&info, &RunOptions::fixed(rounds + 1).with_detail(detail).with_parallel(args.parallel))?;
        let report = equivalence_audit(&d, &gb, 1e-10)?;
        println!(
            "equivalence audit: max discrepancy ≤ 1e-10: {} (observed {:.2e} over {} rounds)",
            if report.pass { "PASS" } else { "FAIL" },
            report.max_discrepancy(),
            report.rounds.len()
        );
        failed |= !report.pass;
    }
    Ok(if failed { ExitCode::from(EXIT_FAILURE) } else { ExitCode::SUCCESS })
}

pub fn audit(args: &AuditArgs) -> Result<ExitCode> {
    let (scenario, info) = load(&args.scenario)?;
    let rounds = args.rounds as usize;
    let detail = TraceDetail { precisions: true, messages: args.messages };
    let d = dwls_run(&info, &RunOptions::fixed(rounds).with_detail(detail))?;
    let g = gbp_run(&info, &RunOptions::fixed(rounds + 1).with_detail(detail))?;
    println!("scenario: {} ({})", args.scenario.display(), shape(&scenario.graph));
    for (name, t) in [("dwls", &d), ("gbp", &g)] {
        if let Some(b) = t.breakdown() {
            eprintln!("error: {name}: {b}");
            return Ok(ExitCode::from(EXIT_FAILURE));
        }
    }
    let report = equivalence_audit(&d, &g, args.tol)?;
    let opt = |v: Option<f64>| v.map_or_else(|| "not compared".into(), |v| format!("{v:.3e}"));
    println!("rounds compared: {} (dwls t vs gbp t+1)", report.rounds.len());
    println!("max estimate discrepancy: {:.3e}", report.max_estimate);
    println!("max precision discrepancy: {}", opt(report.max_precision));
    println!("max message discrepancy: {}", opt(report.max_message));
    if let Some(t) = report.first_failure {
        println!("first failing round: {t}");
    }
    println!("max discrepancy ≤ {:e}: {}", args.tol, if report.pass { "PASS" } else { "FAIL" });
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAILURE) })
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn analyze(args: &AnalyzeArgs) -> Result<ExitCode> {
    let (scenario, info) = load(&args.scenario)?;
    let g = &scenario.graph;
    let config = OracleConfig::default();
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "scenario: {}", args.scenario.display())?;
    writeln!(w, "nodes: {}", g.node_count())?;
    writeln!(w, "edges: {}", g.edge_count())?;
    writeln!(w, "connected: {}", yes_no(g.is_connected()))?;
    writeln!(w, "acyclic: {}", yes_no(g.is_acyclic()))?;
    match g.diameter() {
        Ok(d) => writeln!(w, "diameter: {d}")?,
        Err(_) => writeln!(w, "diameter: n/a (disconnected)")?,
    }
    let n = info.total_dim();
    writeln!(w, "Ψ dimensions: {n}x{n} ({} node blocks)", info.node_count())?;
    let observed = g.self_measurements().iter().filter(|m| m.is_informative()).count();
    match solve_global(&info, &config) {
        Ok(sol) => writeln!(w, "condition number of Ψ (1-norm): {:.4e}", sol.psi_condition)?,
        Err(Error::Unidentifiable) => writeln!(w, "condition number of Ψ (1-norm): n/a (Ψ singular)")?,
        Err(e) => return Err(e.into()),
    }

    if !info.is_scalar() {
        const NA: &str = "n/a (vector variables)";
        writeln!(w, "Ψ̄ PD: {NA}")?;
        writeln!(w, "dominance d: {NA}")?;
        writeln!(w, "dominance margin: {NA}")?;
        writeln!(w, "ρ(Ω̄): {NA}")?;
    } else {
        let cert = dominance_certificate(&info)?;
        writeln!(w, "Ψ̄ PD: {}", yes_no(cert.is_pd))?;
        match (&cert.d_scaling, cert.strictness_margin) {
            (Some(d), Some(m)) => {
                let list: Vec<String> = d.iter().map(|v| format!("{v:.6e}")).collect();
                writeln!(w, "dominance d: [{}]", list.join(", "))?;
                writeln!(w, "dominance margin: {m:.6e}")?;
            }
            _ => {
                writeln!(w, "dominance d: none")?;
                writeln!(w, "dominance margin: none")?;
            }
        }
        match rate_bound(&info, &config) {
            Ok(b) => {
                let rel = if b.rho < 1.0 { "< 1" } else { ">= 1" };
                writeln!(w, "ρ(Ω̄): {:.6} ({rel})", b.rho)?;
            }
            Err(Error::ZeroDiagonal { node }) => writeln!(w, "ρ(Ω̄): n/a (node {node} carries no information)")?,
            Err(e) => return Err(e.into()),
        }
    }
    if observed == 0 {
        writeln!(w, "warning: identifiability assumption violated: no node has a self measurement, so Ψ is singular")?;
    }

    print!("{out}");
    if let Some(path) = &args.output {
        std::fs::write(path, &out).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}
