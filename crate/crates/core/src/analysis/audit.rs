// SPDX-License-Identifier: Apache-2.0

//! Round-by-round comparison of a dwls trace against a gbp trace of the
//! same instance: `x_hat_i(t) = mu_i(t+1)` and `Psi_hat_i(t) = P_i(t+1)`.
//! When both traces carry message logs, the message identities
//! `Sigma_{i->j}(t) = (Gamma_ij + P_0(t+1))^-1` and
//! `Sigma_{i->j}(t)^-1 x_{i->j}(t) = P_0(t+1) mu_0(t+1)` are checked too.

use std::collections::HashMap;

use crate::analysis::trace::{Algorithm, RoundRecord, RunTrace};
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::linalg::{norm_inf, sub_vec, Lu};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundDiscrepancy<T> {
    /// dwls round `t` (compared with gbp round `t + 1`).
    pub round: usize,
    pub estimate: T,
    pub precision: Option<T>,
    pub message: Option<T>,
}

impl<T: Scalar> RoundDiscrepancy<T> {
    pub fn worst(&self) -> T {
        [Some(self.estimate), self.precision, self.message].into_iter().flatten().fold(T::zero(), T::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport<T> {
    pub tolerance: T,
    pub rounds: Vec<RoundDiscrepancy<T>>,
    pub max_estimate: T,
    pub max_precision: Option<T>,
    pub max_message: Option<T>,
    /// First dwls round whose discrepancy exceeds the tolerance.
    pub first_failure: Option<usize>,
    pub pass: bool,
}

impl<T: Scalar> EquivalenceReport<T> {
    pub fn max_discrepancy(&self) -> T {
        self.rounds.iter().map(RoundDiscrepancy::worst).fold(T::zero(), T::max)
    }
}

fn relative<T: Scalar>(diff: T, magnitude: T) -> T {
    diff / (T::one() + magnitude)
}

fn estimate_gap<T: Scalar>(a: &RoundRecord<T>, b: &RoundRecord<T>) -> T {
    let diff = a.estimates.iter().zip(&b.estimates).map(|(x, y)| norm_inf(&sub_vec(x, y))).fold(T::zero(), T::max);
    let mag = a.estimates.iter().map(|x| norm_inf(x)).fold(T::zero(), T::max);
    relative(diff, mag)
}

fn precision_gap<T: Scalar>(a: &RoundRecord<T>, b: &RoundRecord<T>) -> Option<T> {
    let (pa, pb) = (a.precisions.as_ref()?, b.precisions.as_ref()?);
    Some(pa.iter().zip(pb).map(|(x, y)| relative(x.max_abs_diff(y), x.max_abs())).fold(T::zero(), T::max))
}

/// Compares `Sigma` with `(Gamma + P_0)^-1` and `Sigma^-1 x` with `P_0 mu_0`.
/// A singular side counts as an infinite discrepancy.
fn message_gap<T: Scalar>(a: &RoundRecord<T>, b: &RoundRecord<T>) -> Option<T> {
    let (ma, mb) = (a.messages.as_ref()?, b.messages.as_ref()?);
    let by_edge: HashMap<(NodeId, NodeId), _> = mb.iter().map(|m| ((m.from, m.to), m)).collect();
    let mut worst = T::zero();
    for m in ma {
        let Some(other) = by_edge.get(&(m.from, m.to)) else {
            return Some(T::infinity());
        };
        let (Ok(cavity), Ok(sigma)) = (Lu::new(&other.matrix), Lu::new(&m.matrix)) else {
            return Some(T::infinity());
        };
        let sigma_gap = relative(m.matrix.max_abs_diff(&cavity.inverse()), m.matrix.max_abs());
        let info = sigma.solve(&m.vector).expect("block order");
        let info_gap = relative(norm_inf(&sub_vec(&info, &other.vector)), norm_inf(&other.vector));
        worst = worst.max(sigma_gap).max(info_gap);
    }
    Some(worst)
}

/// Checks the round-shifted equivalence of a dwls and a gbp run.
pub fn equivalence_audit<T: Scalar>(dwls: &RunTrace<T>, gbp: &RunTrace<T>, tol: T) -> Result<EquivalenceReport<T>> {
    if dwls.algorithm != Algorithm::Dwls || gbp.algorithm != Algorithm::Gbp {
        return Err(Error::MismatchedTraces(format!(
            "expected a dwls and a gbp trace, got {} and {}",
            dwls.algorithm, gbp.algorithm
        )));
    }
    if dwls.instance != gbp.instance {
        return Err(Error::MismatchedTraces(format!(
            "instance fingerprints differ ({:016x} vs {:016x})",
            dwls.instance, gbp.instance
        )));
    }
    if dwls.node_count() != gbp.node_count() {
        return Err(Error::MismatchedTraces("node counts differ".into()));
    }

    let rounds: Vec<RoundDiscrepancy<T>> = dwls
        .rounds
        .iter()
        .filter_map(|a| {
            let b = gbp.round(a.round + 1)?;
            Some(RoundDiscrepancy {
                round: a.round,
                estimate: estimate_gap(a, b),
                precision: precision_gap(a, b),
                message: message_gap(a, b),
            })
        })
        .collect();
    if rounds.is_empty() {
        return Err(Error::InvalidInput("the traces share no comparable rounds".into()));
    }

    let max_opt =
        |f: fn(&RoundDiscrepancy<T>) -> Option<T>| rounds.iter().map(f).try_fold(T::zero(), |m, v| v.map(|v| m.max(v)));
    let first_failure = rounds.iter().find(|r| !(r.worst() <= tol)).map(|r| r.round);
    Ok(EquivalenceReport {
        tolerance: tol,
        max_estimate: rounds.iter().map(|r| r.estimate).fold(T::zero(), T::max),
        max_precision: max_opt(|r| r.precision),
        max_message: max_opt(|r| r.message),
        pass: first_failure.is_none(),
        first_failure,
        rounds,
    })
}
