// SPDX-License-Identifier: Apache-2.0

//! Seeded scenario generation, scenario files, and trace export.
//!
//! Generation is a pure function of [`ScenarioSpec`]: the random stream is
//! ChaCha8 seeded with `seed` through `SeedableRng::seed_from_u64`, and
//! draws happen in a fixed order (topology, dimensions, self-measured set,
//! true states, self measurements, edge measurements).
//!
//! Defaults: matrix entries uniform on `[-1, 1]` (redrawn if a block comes
//! out all zero), diagonal covariances with entries uniform on
//! `[0.5, 1.5] * scale`, true states uniform on `[-state_scale, state_scale]`,
//! and Gaussian noise drawn from the recorded covariances.

mod export;
mod file;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::{EdgeMeasurement, MeasurementGraph, NodeId, SelfMeasurement};
use crate::linalg::{add_vec, Matrix};
use crate::scalar::Scalar;

pub use export::{export_plot_data, export_trace_csv, write_trace_csv};
pub use file::{load_scenario, parse_scenario, render_scenario, save_scenario, FORMAT_TAG, FORMAT_VERSION};

/// Nodes of the `loopy13` hub, joined to the 12-node ring.
pub const LOOPY13_HUB_LINKS: [usize; 4] = [1, 4, 7, 10];
/// Nodes of `loopy13` without a self measurement.
pub const LOOPY13_UNOBSERVED: [usize; 2] = [2, 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Chain,
    Star,
    Ring,
    Tree,
    RandomConnected,
    /// 12-node ring `1-2-...-12-1` plus node 13 linked to 1, 4, 7 and 10,
    /// with nodes 2 and 5 unobserved. A fixed stand-in for a 13-node loopy
    /// network; it does not claim to match any particular published layout.
    Loopy13,
    /// Loaded from a file; cannot be generated.
    Explicit,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Chain => "chain",
            Topology::Star => "star",
            Topology::Ring => "ring",
            Topology::Tree => "tree",
            Topology::RandomConnected => "random_connected",
            Topology::Loopy13 => "loopy13",
            Topology::Explicit => "explicit",
        })
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "chain" => Topology::Chain,
            "star" => Topology::Star,
            "ring" => Topology::Ring,
            "tree" => Topology::Tree,
            "random_connected" | "random-connected" => Topology::RandomConnected,
            "loopy13" => Topology::Loopy13,
            "explicit" => Topology::Explicit,
            other => return Err(Error::InvalidInput(format!("unknown topology '{other}'"))),
        })
    }
}

/// Per-node state dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dims {
    Uniform(usize),
    /// Each node draws its dimension uniformly from `1..=max`.
    Random {
        max: usize,
    },
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dims::Uniform(d) => write!(f, "{d}"),
            Dims::Random { max } => write!(f, "random:{max}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub topology: Topology,
    pub nodes: usize,
    pub dims: Dims,
    pub seed: u64,
    /// Fraction of nodes with an informative self measurement, in `(0, 1]`.
    /// Ignored by `loopy13`, which fixes its own pattern.
    pub self_density: f64,
    pub self_noise: f64,
    pub edge_noise: f64,
    /// Edges added on top of the spanning tree for `random_connected`;
    /// `None` uses `max(1, nodes / 3)`.
    pub extra_edges: Option<usize>,
    pub state_scale: f64,
}

impl ScenarioSpec {
    pub fn new(topology: Topology, nodes: usize, seed: u64) -> Self {
        Self {
            topology,
            nodes,
            dims: Dims::Uniform(1),
            seed,
            self_density: 0.5,
            self_noise: 1.0,
            edge_noise: 1.0,
            extra_edges: None,
            state_scale: 5.0,
        }
    }

    pub fn loopy13(seed: u64) -> Self {
        Self::new(Topology::Loopy13, 13, seed)
    }

    pub fn with_dims(mut self, dims: Dims) -> Self {
        self.dims = dims;
        self
    }

    pub fn with_self_density(mut self, density: f64) -> Self {
        self.self_density = density;
        self
    }

    pub fn with_extra_edges(mut self, extra: usize) -> Self {
        self.extra_edges = Some(extra);
        self
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Generation(msg));
        if self.nodes == 0 {
            return fail("a scenario needs at least one node".into());
        }
        match self.topology {
            Topology::Explicit => return fail("explicit scenarios are loaded from files, not generated".into()),
            Topology::Loopy13 if self.nodes != 13 => return fail(format!("loopy13 has 13 nodes, not {}", self.nodes)),
            Topology::Ring if self.nodes < 3 => return fail("a ring needs at least 3 nodes".into()),
            Topology::RandomConnected if self.nodes < 3 => {
                return fail("random_connected needs at least 3 nodes".into())
            }
            _ => {}
        }
        match self.dims {
            Dims::Uniform(0) | Dims::Random { max: 0 } => return fail("node dimensions must be at least 1".into()),
            _ => {}
        }
        if !(self.self_density > 0.0 && self.self_density <= 1.0) {
            return fail(format!("self_density must lie in (0, 1], got {}", self.self_density));
        }
        if self.topology != Topology::Loopy13 && self.self_measured_count() == 0 {
            return fail(format!(
                "self_density {} leaves no self-measured node among {} (at least one is required)",
                self.self_density, self.nodes
            ));
        }
        for (name, v) in
            [("self_noise", self.self_noise), ("edge_noise", self.edge_noise), ("state_scale", self.state_scale)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    fn self_measured_count(&self) -> usize {
        (self.self_density * self.nodes as f64).round() as usize
    }

    /// Key/value description written into scenario files.
    pub fn describe(&self) -> Vec<(&'static str, String)> {
        vec![
            ("topology", self.topology.to_string()),
            ("nodes", self.nodes.to_string()),
            ("dims", self.dims.to_string()),
            ("seed", self.seed.to_string()),
            ("self_density", format!("{}", self.self_density)),
            ("self_noise", format!("{}", self.self_noise)),
            ("edge_noise", format!("{}", self.edge_noise)),
            ("extra_edges", self.extra_edges.map_or_else(|| "auto".into(), |e| e.to_string())),
            ("state_scale", format!("{}", self.state_scale)),
            ("rng", "chacha8".into()),
            ("entries", "uniform[-1,1]".into()),
            ("covariance", "diagonal, uniform[0.5,1.5]*noise".into()),
        ]
    }
}

/// True states and the realized noise of every measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth<T> {
    pub x_true: Vec<Vec<T>>,
    /// Per node; empty for nodes without a self measurement.
    pub self_noise: Vec<Vec<T>>,
    /// Per edge, in edge order.
    pub edge_noise: Vec<Vec<T>>,
}

impl<T: Scalar> GroundTruth<T> {
    /// Recomputes every `z` from the truth and compares bitwise.
    pub fn reproduces(&self, g: &MeasurementGraph<T>) -> bool {
        let selfs = g
            .self_measurements()
            .iter()
            .zip(&self.self_noise)
            .all(|(m, v)| m.rows() == 0 || add_vec(&m.a.mul_vec(&self.x_true[m.node.index()]), v) == m.z);
        let edges = g.edges().iter().zip(&self.edge_noise).all(|(e, v)| {
            let lhs = add_vec(&e.b_ij.mul_vec(&self.x_true[e.i.index()]), &e.b_ji.mul_vec(&self.x_true[e.j.index()]));
            add_vec(&lhs, v) == e.z
        });
        selfs && edges && self.edge_noise.len() == g.edge_count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    /// Free-form description lines (`meta` entries in the file).
    pub meta: Vec<(String, String)>,
    pub graph: MeasurementGraph<T>,
    pub truth: Option<GroundTruth<T>>,
}

fn topology_edges(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let n = spec.nodes;
    match spec.topology {
        Topology::Chain => (1..n).map(|i| (i, i + 1)).collect(),
        Topology::Star => (2..=n).map(|i| (1, i)).collect(),
        Topology::Ring => (1..n).map(|i| (i, i + 1)).chain([(n, 1)]).collect(),
        Topology::Tree => random_tree(n, rng),
        Topology::RandomConnected => {
            let mut edges = random_tree(n, rng);
            let mut present: BTreeSet<(usize, usize)> = edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
            let wanted = spec.extra_edges.unwrap_or((n / 3).max(1)).min(n * (n - 1) / 2 - (n - 1));
            let mut added = 0;
            while added < wanted {
                let a = rng.random_range(1..=n);
                let b = rng.random_range(1..=n);
                if a != b && present.insert((a.min(b), a.max(b))) {
                    edges.push((a, b));
                    added += 1;
                }
            }
            edges
        }
        Topology::Loopy13 => {
            (1..12).map(|i| (i, i + 1)).chain([(12, 1)]).chain(LOOPY13_HUB_LINKS.map(|k| (13, k))).collect()
        }
        Topology::Explicit => unreachable!("rejected by validate"),
    }
}

/// Random recursive tree: node `k` attaches to a uniform earlier node.
fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    (2..=n).map(|k| (rng.random_range(1..k), k)).collect()
}

fn uniform_block<T: Scalar>(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix<T> {
    loop {
        let m = Matrix::from_fn(rows, cols, |_, _| T::of(rng.random_range(-1.0..=1.0)));
        if !m.is_zero() {
            return m;
        }
    }
}

fn diagonal_covariance<T: Scalar>(rows: usize, scale: f64, rng: &mut ChaCha8Rng) -> Matrix<T> {
    let diag: Vec<T> = (0..rows).map(|_| T::of(rng.random_range(0.5..=1.5) * scale)).collect();
    Matrix::diagonal(&diag)
}

fn noise<T: Scalar>(r: &Matrix<T>, rng: &mut ChaCha8Rng) -> Vec<T> {
    (0..r.rows())
        .map(|k| {
            let std_normal: f64 = rng.sample(StandardNormal);
            r[(k, k)].sqrt() * T::of(std_normal)
        })
        .collect()
}

/// Generates a measurement graph and the ground truth behind it.
pub fn generate<T: Scalar>(spec: &ScenarioSpec) -> Result<Scenario<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.nodes;

    let edges = topology_edges(spec, &mut rng);
    let dims: Vec<usize> = (0..n)
        .map(|_| match spec.dims {
            Dims::Uniform(d) => d,
            Dims::Random { max } => rng.random_range(1..=max),
        })
        .collect();

    let observed: BTreeSet<usize> = if spec.topology == Topology::Loopy13 {
        (1..=n).filter(|i| !LOOPY13_UNOBSERVED.contains(i)).collect()
    } else {
        let mut order: Vec<usize> = (1..=n).collect();
        order.shuffle(&mut rng);
        order.into_iter().take(spec.self_measured_count()).collect()
    };

    let x_true: Vec<Vec<T>> = dims
        .iter()
        .map(|&d| (0..d).map(|_| T::of(rng.random_range(-spec.state_scale..=spec.state_scale))).collect())
        .collect();

    let mut self_measurements = Vec::with_capacity(observed.len());
    let mut self_noise = vec![Vec::new(); n];
    for &i in &observed {
        let d = dims[i - 1];
        let a = uniform_block::<T>(d, d, &mut rng);
        let r = diagonal_covariance::<T>(d, spec.self_noise, &mut rng);
        let v = noise(&r, &mut rng);
        let z = add_vec(&a.mul_vec(&x_true[i - 1]), &v);
        self_measurements.push(SelfMeasurement { node: NodeId(i), a, r, z });
        self_noise[i - 1] = v;
    }

    let mut edge_measurements = Vec::with_capacity(edges.len());
    let mut edge_noise = Vec::with_capacity(edges.len());
    for &(i, j) in &edges {
        let rows = dims[i - 1].max(dims[j - 1]);
        let b_ij = uniform_block::<T>(rows, dims[i - 1], &mut rng);
        let b_ji = uniform_block::<T>(rows, dims[j - 1], &mut rng);
        let r = diagonal_covariance::<T>(rows, spec.edge_noise, &mut rng);
        let v = noise(&r, &mut rng);
        let clean = add_vec(&b_ij.mul_vec(&x_true[i - 1]), &b_ji.mul_vec(&x_true[j - 1]));
        let z = add_vec(&clean, &v);
        edge_measurements.push(EdgeMeasurement { i: NodeId(i), j: NodeId(j), b_ij, b_ji, r, z });
        edge_noise.push(v);
    }

    let graph = MeasurementGraph::new(dims, self_measurements, edge_measurements)?;
    let meta = spec.describe().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    Ok(Scenario { meta, graph, truth: Some(GroundTruth { x_true, self_noise, edge_noise }) })
}
