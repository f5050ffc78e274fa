// SPDX-License-Identifier: Apache-2.0

use crate::analysis::metrics::ErrorTrace;
use crate::error::{Error, Result};
use crate::oracle::RateBound;
use crate::scalar::Scalar;

/// Slack on `rho` allowed for the empirical asymptotic rate.
pub const RATE_SLACK: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport<T> {
    pub rho: T,
    /// Smallest `C` with `max_i |x_i(k) - x_i*| <= rho^k C` on every
    /// non-exact recorded round.
    pub c: T,
    /// `rho^k C` per recorded round.
    pub envelope: Vec<T>,
    pub holds_everywhere: bool,
    /// Round at which the envelope is tight.
    pub tight_round: Option<usize>,
    /// Geometric-mean per-round decay of the max error over the last half
    /// of the run.
    pub rate_hat: T,
    /// Least-squares slope of `y1` over the same window.
    pub y1_slope: Option<T>,
    /// Slope of the envelope in `y1` units, `2 log10 rho`.
    pub bound_y1_slope: T,
    /// `rate_hat <= rho + RATE_SLACK`.
    pub pass: bool,
}

impl<T: Scalar> EnvelopeReport<T> {
    /// Observed decay strictly faster than `rho`.
    pub fn faster_than_bound(&self) -> bool {
        self.rate_hat < self.rho
    }

    /// Envelope in `y1` units, `log10((rho^k C)^2)`, per recorded round.
    pub fn envelope_y1(&self) -> Vec<T> {
        self.envelope.iter().map(|e| T::two() * e.log10()).collect()
    }
}

fn fit_slope<T: Scalar>(points: &[(T, T)]) -> Option<T> {
    if points.len() < 2 {
        return None;
    }
    let n = T::of(points.len() as f64);
    let mx = points.iter().map(|p| p.0).sum::<T>() / n;
    let my = points.iter().map(|p| p.1).sum::<T>() / n;
    let sxy: T = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: T = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > T::zero()).then(|| sxy / sxx)
}

/// Fits `C` for the `rho^k C` error envelope and estimates the observed rate.
///
/// Rounds flagged exact in `err` satisfy the envelope trivially and are
/// left out of both the fit and the rate estimate.
pub fn rate_envelope<T: Scalar>(err: &ErrorTrace<T>, bound: &RateBound<T>) -> Result<EnvelopeReport<T>> {
    let rho = bound.rho;
    if !(rho < T::one()) {
        return Err(Error::BoundInapplicable { rho: rho.to_f64_lossless() });
    }
    let live: Vec<usize> = (0..err.rounds.len()).filter(|&k| !err.is_exact(k)).collect();
    let rho_pow = |round: usize| rho.powi(round as i32);

    let mut c = T::zero();
    let mut tight_round = None;
    for &k in &live {
        let scale = rho_pow(err.rounds[k]);
        let needed = if scale > T::zero() { err.max_error[k] / scale } else { T::infinity() };
        if needed > c || tight_round.is_none() {
            c = c.max(needed);
            tight_round = Some(err.rounds[k]);
        }
    }
    let envelope: Vec<T> = err.rounds.iter().map(|&r| c * rho_pow(r)).collect();
    let slack = T::one() + T::of(1e-12);
    let holds_everywhere = live.iter().all(|&k| err.max_error[k] <= envelope[k] * slack);

    let half = err.rounds.len() / 2;
    let tail: Vec<usize> = live.iter().copied().filter(|&k| k >= half).collect();
    let window = if tail.len() >= 2 { tail } else { live.clone() };
    let rate_hat = match (window.first(), window.last()) {
        (Some(&a), Some(&b)) if b > a => {
            let steps = T::of((err.rounds[b] - err.rounds[a]) as f64);
            (err.max_error[b] / err.max_error[a]).powf(T::one() / steps)
        }
        _ => T::zero(),
    };
    let y1_points: Vec<(T, T)> = window.iter().map(|&k| (T::of(err.rounds[k] as f64), err.y1[k])).collect();

    Ok(EnvelopeReport {
        rho,
        c,
        envelope,
        holds_everywhere,
        tight_round,
        rate_hat,
        y1_slope: fit_slope(&y1_points),
        bound_y1_slope: T::two() * rho.log10(),
        pass: rate_hat <= rho + T::of(RATE_SLACK),
    })
}
