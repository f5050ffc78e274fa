// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

use crate::graph::NodeId;
use crate::linalg::LinalgError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("{what}: covariance is not symmetric positive definite")]
    CovarianceNotPd { what: String },

    #[error(
        "unidentifiable system: the information matrix is singular \
         (every network needs at least one self measurement)"
    )]
    Unidentifiable,

    #[error("node {node} is locally unidentifiable: its diagonal information block is singular")]
    LocallyUnidentifiable { node: NodeId },

    #[error("{operation} is only defined for scalar node states (node {node} has dimension {dim})")]
    Unsupported { operation: &'static str, node: NodeId, dim: usize },

    #[error("node {node} has a zero diagonal information entry")]
    ZeroDiagonal { node: NodeId },

    #[error("rate bound inapplicable: spectral radius {rho} is not below 1")]
    BoundInapplicable { rho: f64 },

    #[error("traces do not belong to the same instance: {0}")]
    MismatchedTraces(String),

    #[error("scenario generation failed: {0}")]
    Generation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output to {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
