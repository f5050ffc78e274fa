// SPDX-License-Identifier: Apache-2.0

//! Distributed weighted least-squares estimation over measurement graphs.
//!
//! Each node holds a state vector, a local self measurement and the
//! measurements on its incident edges. [`dwls_run`] and [`gbp_run`] solve the
//! network-wide WLS problem by synchronous message passing; [`solve_global`]
//! is the centralized reference. The [`analysis`] module compares runs
//! against it and against each other.
//!
//! ```
//! use netwls::{assemble_information, dwls_run, solve_global, GraphBuilder, OracleConfig, RunOptions};
//!
//! let g: netwls::Graph = GraphBuilder::new(vec![1, 1])
//!     .scalar_self(1, 1.0, 1.0, 0.0)
//!     .scalar_edge(1, 2, 1.0, -1.0, 1.0, 2.0)
//!     .build()
//!     .unwrap();
//! let info = assemble_information(&g).unwrap();
//! let exact = solve_global(&info, &OracleConfig::default()).unwrap();
//! let trace = dwls_run(&info, &RunOptions::fixed(2)).unwrap();
//! let last = trace.final_estimates().unwrap();
//! assert!((last[1][0] - exact.x_star[1][0]).abs() < 1e-12);
//! ```
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases in
//! this module fix the common `f64` case.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod dwls;
pub mod error;
pub mod gbp;
pub mod graph;
pub mod information;
pub mod linalg;
pub mod oracle;
pub mod scalar;
pub mod scenario;

pub use analysis::{
    equivalence_audit, error_trace, rate_envelope, Algorithm, Breakdown, BreakdownKind, EnvelopeReport,
    EquivalenceReport, ErrorTrace, RunOptions, RunTrace, StopReason, TraceDetail,
};
pub use dwls::{dwls_run, DwlsEngine};
pub use error::{Error, Result};
pub use gbp::{gbp_run, GbpEngine};
pub use graph::{EdgeMeasurement, GraphBuilder, MeasurementGraph, NodeId, SelfMeasurement};
pub use information::{assemble_information, assemble_stacked, InformationSystem, StackedSystem};
pub use linalg::{LinalgError, Matrix};
pub use oracle::{
    comparison_matrix, dominance_certificate, rate_bound, solve_global, DominanceCertificate, GlobalSolution,
    OracleConfig, RateBound,
};
pub use scalar::Scalar;
pub use scenario::{generate, load_scenario, save_scenario, Dims, GroundTruth, Scenario, ScenarioSpec, Topology};

pub type Mat = Matrix<f64>;
pub type Graph = MeasurementGraph<f64>;
pub type Info = InformationSystem<f64>;
pub type Trace = RunTrace<f64>;
pub type Solution = GlobalSolution<f64>;
pub type Bound = RateBound<f64>;

pub type Mat32 = Matrix<f32>;
pub type Graph32 = MeasurementGraph<f32>;
pub type Info32 = InformationSystem<f32>;
pub type Trace32 = RunTrace<f32>;
