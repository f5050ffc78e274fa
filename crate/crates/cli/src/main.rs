// SPDX-License-Identifier: Apache-2.0

//! `netwls` command-line driver.
//!
//! Exit codes: 0 success, 2 usage error, 3 runtime or numerical failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use netwls::{Dims, ScenarioSpec, Topology};

pub const EXIT_FAILURE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "netwls", version, about = "Distributed WLS estimation over measurement networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a seeded scenario file (measurements plus ground truth).
    Generate(GenerateArgs),
    /// Solve centrally, run the message-passing engine(s) and export traces.
    Run(RunArgs),
    /// Round-by-round equivalence check of dwls against gbp.
    Audit(AuditArgs),
    /// Structural and matrix report for a scenario.
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TopologyArg {
    Chain,
    Star,
    Ring,
    Tree,
    RandomConnected,
    Loopy13,
}

impl From<TopologyArg> for Topology {
    fn from(t: TopologyArg) -> Self {
        match t {
            TopologyArg::Chain => Topology::Chain,
            TopologyArg::Star => Topology::Star,
            TopologyArg::Ring => Topology::Ring,
            TopologyArg::Tree => Topology::Tree,
            TopologyArg::RandomConnected => Topology::RandomConnected,
            TopologyArg::Loopy13 => Topology::Loopy13,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Dwls,
    Gbp,
    Both,
}

fn parse_dims(s: &str) -> Result<Dims, String> {
    let bad = || format!("expected N or random:MAX with N, MAX >= 1, got '{s}'");
    let value = |t: &str| t.parse::<usize>().ok().filter(|&v| v >= 1).ok_or_else(bad);
    match s.strip_prefix("random:") {
        Some(max) => Ok(Dims::Random { max: value(max)? }),
        None => Ok(Dims::Uniform(value(s)?)),
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "random-connected")]
    topology: TopologyArg,
    /// Node count (loopy13 is always 13).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    nodes: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// State dimension per node: `N` or `random:MAX`.
    #[arg(long, default_value = "1", value_parser = parse_dims)]
    dims: Dims,
    /// Fraction of nodes with a self measurement.
    #[arg(long, default_value_t = 0.5)]
    self_density: f64,
    /// Extra edges on top of the spanning tree (random-connected only).
    #[arg(long)]
    extra_edges: Option<usize>,
    /// Output file; defaults to `<topology>-n<N>-s<seed>.scn`.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value = "dwls")]
    pub algorithm: AlgorithmArg,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_rounds: u64,
    /// Stop once no estimate moves by more than this between rounds.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Trace CSV path; defaults to the scenario path with `.<algorithm>.csv`.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Also write `round y1 bound_y1` columns for plotting.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Compute node updates within a round in parallel.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    pub scenario: PathBuf,
    /// dwls rounds to compare (gbp runs one more).
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
    pub rounds: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Also compare message payloads.
    #[arg(long)]
    pub messages: bool,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    pub scenario: PathBuf,
    /// Also write the report to this file.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn usage_error(message: String) -> ! {
    Cli::command().error(clap::error::ErrorKind::ValueValidation, message).exit()
}

fn positive(name: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        usage_error(format!("--{name} must be a positive number, got {v}"));
    }
}

fn generate_spec(args: &GenerateArgs) -> ScenarioSpec {
    let topology = Topology::from(args.topology);
    let nodes = match (topology, args.nodes) {
        (Topology::Loopy13, Some(n)) if n != 13 => usage_error(format!("loopy13 has 13 nodes, not {n}")),
        (Topology::Loopy13, _) => 13,
        (_, Some(n)) => n as usize,
        (_, None) => 10,
    };
    if !(args.self_density > 0.0 && args.self_density <= 1.0) {
        usage_error(format!("--self-density must lie in (0, 1], got {}", args.self_density));
    }
    let mut spec = if topology == Topology::Loopy13 {
        ScenarioSpec::loopy13(args.seed)
    } else {
        ScenarioSpec::new(topology, nodes, args.seed).with_self_density(args.self_density)
    };
    spec = spec.with_dims(args.dims);
    if let Some(extra) = args.extra_edges {
        if topology != Topology::RandomConnected {
            usage_error("--extra-edges applies to random-connected only".into());
        }
        spec = spec.with_extra_edges(extra);
    }
    spec
}

/// Error chain joined by `: `, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !text.contains(&msg) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&msg);
        }
    }
    text
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(args) => {
            let spec = generate_spec(args);
            let output = args
                .output
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("{}-n{}-s{}.scn", spec.topology, spec.nodes, spec.seed)));
            commands::generate(&spec, &output)
        }
        Command::Run(args) => {
            positive("tol", args.tol);
            commands::run(args)
        }
        Command::Audit(args) => {
            positive("tol", args.tol);
            commands::audit(args)
        }
        Command::Analyze(args) => commands::analyze(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
