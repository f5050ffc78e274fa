// SPDX-License-Identifier: Apache-2.0

use crate::analysis::trace::RunTrace;
use crate::error::{Error, Result};
use crate::linalg::{norm2, sub_vec};
use crate::oracle::GlobalSolution;
use crate::scalar::Scalar;

/// Per-round error of a run against the centralized solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTrace<T> {
    pub rounds: Vec<usize>,
    /// `log10(sum_i ||x_i(k) - x_i*||^2 / n)`; `-inf` marks an exact round.
    pub y1: Vec<T>,
    /// `||x_i(k) - x_i*||_2` per round, per node.
    pub abs_errors: Vec<Vec<T>>,
    /// `max_i ||x_i(k) - x_i*||_2` per round.
    pub max_error: Vec<T>,
    /// First round from which the node's error stays within `hit_tol`.
    pub first_hit: Vec<Option<usize>>,
    pub hit_tol: T,
    /// Errors at or below this level are rounding noise and count as exact.
    pub exact_floor: T,
    /// Set when some node state is a vector: `y1` then uses squared
    /// Euclidean norms per node.
    pub extended_metric: bool,
}

impl<T: Scalar> ErrorTrace<T> {
    pub fn is_exact(&self, idx: usize) -> bool {
        self.y1[idx] == T::neg_infinity()
    }

    pub fn position(&self, round: usize) -> Option<usize> {
        self.rounds.iter().position(|&r| r == round)
    }

    pub fn final_y1(&self) -> Option<T> {
        self.y1.last().copied()
    }

    /// Round at which every node has settled within `hit_tol`.
    pub fn all_hit_round(&self) -> Option<usize> {
        self.first_hit.iter().try_fold(0, |m, h| h.map(|h| m.max(h)))
    }
}

/// Computes per-round errors. `hit_tol` sets the first-hit threshold.
pub fn error_trace<T: Scalar>(trace: &RunTrace<T>, truth: &GlobalSolution<T>, hit_tol: T) -> Result<ErrorTrace<T>> {
    let n = truth.x_star.len();
    for r in &trace.rounds {
        let shapes_match =
            r.estimates.len() == n && r.estimates.iter().zip(&truth.x_star).all(|(a, b)| a.len() == b.len());
        if !shapes_match {
            return Err(Error::InvalidInput(format!("round {} does not match the solution's node layout", r.round)));
        }
    }
    let extended_metric = truth.x_star.iter().any(|x| x.len() != 1);
    let exact_floor = T::epsilon() * T::of(16.0) * (T::one() + truth.max_abs());
    let count = T::of(n as f64);

    let mut rounds = Vec::with_capacity(trace.rounds.len());
    let mut y1 = Vec::with_capacity(trace.rounds.len());
    let mut abs_errors = Vec::with_capacity(trace.rounds.len());
    let mut max_error = Vec::with_capacity(trace.rounds.len());
    for r in &trace.rounds {
        let errs: Vec<T> = r.estimates.iter().zip(&truth.x_star).map(|(x, s)| norm2(&sub_vec(x, s))).collect();
        let worst = errs.iter().copied().fold(T::zero(), T::max);
        let sq: T = errs.iter().map(|e| *e * *e).sum();
        rounds.push(r.round);
        y1.push(if worst <= exact_floor { T::neg_infinity() } else { (sq / count).log10() });
        max_error.push(worst);
        abs_errors.push(errs);
    }

    let first_hit = (0..n)
        .map(|i| {
            let mut hit = None;
            for (k, errs) in abs_errors.iter().enumerate().rev() {
                if errs[i] <= hit_tol {
                    hit = Some(rounds[k]);
                } else {
                    break;
                }
            }
            hit
        })
        .collect();

    Ok(ErrorTrace { rounds, y1, abs_errors, max_error, first_hit, hit_tol, exact_floor, extended_metric })
}
