// SPDX-License-Identifier: Apache-2.0

//! Run traces and the round-synchronous driver shared by both engines.
//!
//! The driver only sequences rounds and applies the stopping rule; all
//! update arithmetic lives in the engines.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::linalg::{norm_inf, sub_vec, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Dwls,
    Gbp,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Dwls => "dwls",
            Algorithm::Gbp => "gbp",
        })
    }
}

/// Optional per-round payloads. Both are off by default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraceDetail {
    /// Per-node precision: `Psi_hat_i(t)` for dwls, `P_i(t)` for gbp.
    pub precisions: bool,
    /// Per-directed-edge message payloads (see [`MessageRecord`]).
    pub messages: bool,
}

impl TraceDetail {
    pub fn full() -> Self {
        Self { precisions: true, messages: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions<T> {
    /// Iterations to execute after initialization (at least 1).
    pub max_rounds: usize,
    /// Stop once `max_i ||x_i(t) - x_i(t-1)||_inf < tol`; `None` runs the
    /// full horizon.
    pub tol: Option<T>,
    pub detail: TraceDetail,
    /// Compute the per-node updates of a round on the rayon pool.
    pub parallel: bool,
}

impl<T: Scalar> RunOptions<T> {
    pub fn new(max_rounds: usize, tol: T) -> Self {
        Self { max_rounds, tol: Some(tol), detail: TraceDetail::default(), parallel: false }
    }

    /// Exactly `rounds` iterations, no early stop.
    pub fn fixed(rounds: usize) -> Self {
        Self { max_rounds: rounds, tol: None, detail: TraceDetail::default(), parallel: false }
    }

    pub fn with_detail(mut self, detail: TraceDetail) -> Self {
        self.detail = detail;
        self
    }

    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_rounds == 0 {
            return Err(Error::InvalidInput("max_rounds must be at least 1".into()));
        }
        if let Some(tol) = self.tol {
            if !(tol > T::zero()) {
                return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
            }
        }
        Ok(())
    }
}

/// Payload of one directed message.
///
/// For dwls: `matrix = Sigma_{i->j}(t)`, `vector = x_{i->j}(t)`.
/// For gbp: `matrix = Gamma_ij + P_0(t)`, `vector = P_0(t) mu_0(t)`, the
/// exclude-`j` aggregates node `i` used to form its message at round `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageRecord<T> {
    pub from: NodeId,
    pub to: NodeId,
    pub matrix: Matrix<T>,
    pub vector: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord<T> {
    pub round: usize,
    pub estimates: Vec<Vec<T>>,
    pub precisions: Option<Vec<Matrix<T>>>,
    pub messages: Option<Vec<MessageRecord<T>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakdownKind {
    /// The node's aggregated precision is singular.
    SingularPrecision,
    /// A scalar node's aggregated precision is not positive.
    NonPositivePrecision,
    /// The matrix inverted to form an outgoing message is singular.
    SingularMessage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Breakdown {
    pub node: NodeId,
    pub neighbor: Option<NodeId>,
    pub round: usize,
    pub kind: BreakdownKind,
}

impl fmt::Display for Breakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            BreakdownKind::SingularPrecision => "singular node precision",
            BreakdownKind::NonPositivePrecision => "non-positive node precision",
            BreakdownKind::SingularMessage => "singular message precision",
        };
        write!(f, "iteration breakdown at round {}, node {}", self.round, self.node)?;
        if let Some(j) = self.neighbor {
            write!(f, " (message to {j})")?;
        }
        write!(f, ": {what}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxRounds,
    Breakdown(Breakdown),
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::Converged => f.write_str("converged"),
            StopReason::MaxRounds => f.write_str("max_rounds"),
            StopReason::Breakdown(b) => write!(f, "breakdown ({b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace<T> {
    pub algorithm: Algorithm,
    /// [`crate::InformationSystem::fingerprint`] of the instance.
    pub instance: u64,
    pub max_rounds: usize,
    /// Recorded rounds in increasing order. dwls starts at round 0
    /// (initialization), gbp at round 1.
    pub rounds: Vec<RoundRecord<T>>,
    pub stop: StopReason,
}

impl<T: Scalar> RunTrace<T> {
    /// Iterations executed after initialization.
    pub fn rounds_executed(&self) -> usize {
        self.rounds.last().map_or(0, |r| r.round)
    }

    pub fn round(&self, t: usize) -> Option<&RoundRecord<T>> {
        let first = self.rounds.first()?.round;
        self.rounds.get(t.checked_sub(first)?)
    }

    pub fn final_estimates(&self) -> Option<&[Vec<T>]> {
        self.rounds.last().map(|r| r.estimates.as_slice())
    }

    pub fn node_count(&self) -> usize {
        self.rounds.first().map_or(0, |r| r.estimates.len())
    }

    pub fn breakdown(&self) -> Option<Breakdown> {
        match self.stop {
            StopReason::Breakdown(b) => Some(b),
            _ => None,
        }
    }
}

/// `max_i ||a_i - b_i||_inf`.
pub(crate) fn max_change<T: Scalar>(a: &[Vec<T>], b: &[Vec<T>]) -> T {
    a.iter().zip(b).map(|(x, y)| norm_inf(&sub_vec(x, y))).fold(T::zero(), T::max)
}

pub(crate) trait RoundEngine<T: Scalar> {
    fn algorithm(&self) -> Algorithm;
    fn instance(&self) -> u64;
    /// Record for the state right after initialization, if it has estimates.
    fn initial_record(&self, detail: TraceDetail) -> Option<RoundRecord<T>>;
    fn advance(&mut self, detail: TraceDetail, parallel: bool) -> std::result::Result<RoundRecord<T>, Breakdown>;
}

pub(crate) fn drive<T: Scalar, E: RoundEngine<T>>(engine: &mut E, options: &RunOptions<T>) -> Result<RunTrace<T>> {
    options.validate()?;
    let mut rounds: Vec<RoundRecord<T>> = engine.initial_record(options.detail).into_iter().collect();
    let mut stop = StopReason::MaxRounds;
    for _ in 0..options.max_rounds {
        match engine.advance(options.detail, options.parallel) {
            Ok(record) => {
                let settled = match (options.tol, rounds.last()) {
                    (Some(tol), Some(prev)) => max_change(&record.estimates, &prev.estimates) < tol,
                    _ => false,
                };
                rounds.push(record);
                if settled {
                    stop = StopReason::Converged;
                    break;
                }
            }
            Err(b) => {
                stop = StopReason::Breakdown(b);
                break;
            }
        }
    }
    Ok(RunTrace {
        algorithm: engine.algorithm(),
        instance: engine.instance(),
        max_rounds: options.max_rounds,
        rounds,
        stop,
    })
}
