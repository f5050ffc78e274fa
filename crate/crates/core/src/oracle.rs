// SPDX-License-Identifier: Apache-2.0

//! Centralized ground truth and matrix analysis.
//!
//! [`solve_global`] computes `x* = Psi^-1 alpha` from the assembled blocks.
//! The remaining operations are scalar-only: the comparison matrix
//! `Psi_bar` (`|Psi_ii|` on the diagonal, `-|Psi_ij|` off it), a
//! generalized-diagonal-dominance witness `d` with `Psi_bar d = 1`, and the
//! spectral radius of the absolute Jacobi matrix `|I - D^-1 Psi|` that
//! governs the convergence envelope `|x_i(k) - x_i*| <= rho^k C`.

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::information::InformationSystem;
use crate::linalg::{norm2, sub_vec, Cholesky, Lu, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Relative residual target for the global solve.
    pub solve_tol: f64,
    /// Stopping threshold on the change of the spectral-radius estimate.
    pub eig_tol: f64,
    pub max_eig_iters: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { solve_tol: 1e-10, eig_tol: 1e-12, max_eig_iters: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSolution<T> {
    /// `x_i*` per node.
    pub x_star: Vec<Vec<T>>,
    /// 1-norm condition number of `Psi`.
    pub psi_condition: T,
    /// `||Psi x* - alpha||_2`.
    pub residual: T,
    /// Whether the symmetric positive-definite path succeeded.
    pub used_cholesky: bool,
}

impl<T: Scalar> GlobalSolution<T> {
    pub fn flat(&self) -> Vec<T> {
        self.x_star.iter().flatten().copied().collect()
    }

    /// `max_i ||x_i*||_inf`.
    pub fn max_abs(&self) -> T {
        self.x_star.iter().flatten().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

enum Factor<T> {
    Cholesky(Cholesky<T>),
    Lu(Lu<T>),
}

impl<T: Scalar> Factor<T> {
    fn solve(&self, b: &[T]) -> Vec<T> {
        match self {
            Factor::Cholesky(c) => c.solve(b),
            Factor::Lu(l) => l.solve(b),
        }
        .expect("factor order matches right-hand side")
    }

    fn inverse(&self) -> Matrix<T> {
        match self {
            Factor::Cholesky(c) => c.inverse(),
            Factor::Lu(l) => l.inverse(),
        }
    }
}

/// Solves the centralized WLS problem.
pub fn solve_global<T: Scalar>(info: &InformationSystem<T>, config: &OracleConfig) -> Result<GlobalSolution<T>> {
    let psi = info.dense_psi();
    let alpha = info.dense_alpha();
    let factor = match Cholesky::new(&psi) {
        Ok(c) => Factor::Cholesky(c),
        Err(_) => Factor::Lu(Lu::new(&psi).map_err(|_| Error::Unidentifiable)?),
    };

    let mut x = factor.solve(&alpha);
    let mut residual = sub_vec(&psi.mul_vec(&x), &alpha);
    let target = T::of(config.solve_tol) * norm2(&alpha);
    if norm2(&residual) > target {
        // one step of iterative refinement
        let dx = factor.solve(&residual);
        x = sub_vec(&x, &dx);
        residual = sub_vec(&psi.mul_vec(&x), &alpha);
    }

    let psi_condition = psi.norm_one() * factor.inverse().norm_one();
    let mut x_star = Vec::with_capacity(info.node_count());
    let mut rest = x.as_slice();
    for dim in info.dims() {
        let (head, tail) = rest.split_at(dim);
        x_star.push(head.to_vec());
        rest = tail;
    }
    Ok(GlobalSolution {
        x_star,
        psi_condition,
        residual: norm2(&residual),
        used_cholesky: matches!(factor, Factor::Cholesky(_)),
    })
}

fn require_scalar<T: Scalar>(info: &InformationSystem<T>, operation: &'static str) -> Result<()> {
    match info.first_vector_node() {
        Some((node, dim)) => Err(Error::Unsupported { operation, node, dim }),
        None => Ok(()),
    }
}

/// Comparison matrix of a scalar `Psi`.
pub fn comparison_matrix<T: Scalar>(info: &InformationSystem<T>) -> Result<Matrix<T>> {
    require_scalar(info, "comparison matrix")?;
    let psi = info.dense_psi();
    Ok(Matrix::from_fn(psi.rows(), psi.cols(), |i, j| if i == j { psi[(i, j)].abs() } else { -psi[(i, j)].abs() }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceCertificate<T> {
    /// `Psi_bar` positive definite (Cholesky succeeded).
    pub is_pd: bool,
    /// `d` with `Psi_bar d = 1`, present only when every `d_i > 0` and the
    /// dominance margin is positive.
    pub d_scaling: Option<Vec<T>>,
    /// `min_i (|a_ii| d_i - sum_{j != i} |a_ij| d_j)`.
    pub strictness_margin: Option<T>,
}

/// `min_i (|a_ii| d_i - sum_{j != i} |a_ij| d_j)`.
pub fn dominance_margin<T: Scalar>(a: &Matrix<T>, d: &[T]) -> T {
    (0..a.rows())
        .map(|i| {
            let off: T = (0..a.cols()).filter(|&j| j != i).map(|j| a[(i, j)].abs() * d[j]).sum();
            a[(i, i)].abs() * d[i] - off
        })
        .fold(T::infinity(), T::min)
}

/// Constructive generalized-diagonal-dominance witness for a scalar `Psi`.
pub fn dominance_certificate<T: Scalar>(info: &InformationSystem<T>) -> Result<DominanceCertificate<T>> {
    let bar = comparison_matrix(info)?;
    let Ok(chol) = Cholesky::new(&bar) else {
        return Ok(DominanceCertificate { is_pd: false, d_scaling: None, strictness_margin: None });
    };
    let d = chol.solve(&vec![T::one(); bar.rows()])?;
    let margin = dominance_margin(&bar, &d);
    let valid = d.iter().all(|&v| v > T::zero()) && margin > T::zero();
    Ok(DominanceCertificate { is_pd: true, d_scaling: valid.then_some(d), strictness_margin: valid.then_some(margin) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateBound<T> {
    /// `|I - D^-1 Psi|`, `D = diag(Psi_ii)`.
    pub omega_bar: Matrix<T>,
    /// Spectral radius of `omega_bar`.
    pub rho: T,
    /// Collatz-Wielandt bracket `[lower, upper]` around `rho` at exit.
    pub rho_bracket: (T, T),
    pub iterations: usize,
    pub converged: bool,
}

/// Builds `|I - D^-1 Psi|` and its spectral radius.
pub fn rate_bound<T: Scalar>(info: &InformationSystem<T>, config: &OracleConfig) -> Result<RateBound<T>> {
    require_scalar(info, "rate bound")?;
    let psi = info.dense_psi();
    let n = psi.rows();
    if let Some(i) = (0..n).find(|&i| psi[(i, i)] == T::zero()) {
        return Err(Error::ZeroDiagonal { node: NodeId::from_index(i) });
    }
    let omega_bar = Matrix::from_fn(n, n, |i, j| {
        let delta = if i == j { T::one() } else { T::zero() };
        (delta - psi[(i, j)] / psi[(i, i)]).abs()
    });
    let (rho, rho_bracket, iterations, converged) =
        spectral_radius_nonnegative(&omega_bar, T::of(config.eig_tol), config.max_eig_iters);
    Ok(RateBound { omega_bar, rho, rho_bracket, iterations, converged })
}

/// Power iteration on `M + I` for entry-wise nonnegative `M`.
///
/// The shift makes the Perron root strictly dominant even for periodic
/// (e.g. bipartite) patterns, where plain power iteration oscillates.
/// Returns `(rho, (lower, upper), iterations, converged)`.
pub fn spectral_radius_nonnegative<T: Scalar>(m: &Matrix<T>, tol: T, max_iters: usize) -> (T, (T, T), usize, bool) {
    let n = m.rows();
    if n == 0 {
        return (T::zero(), (T::zero(), T::zero()), 0, true);
    }
    let inv_n = T::one() / T::of(n as f64);
    let mut v = vec![inv_n; n];
    let mut estimate = T::nan();
    let mut bracket = (T::zero(), T::infinity());
    for it in 1..=max_iters {
        let mut w = m.mul_vec(&v);
        w.iter_mut().zip(&v).for_each(|(wi, vi)| *wi = *wi + *vi);
        let norm: T = w.iter().copied().sum();
        let (lo, hi) = w.iter().zip(&v).filter(|(_, vi)| **vi > T::zero()).fold(
            (T::infinity(), T::neg_infinity()),
            |(lo, hi), (wi, vi)| {
                let ratio = *wi / *vi;
                (lo.min(ratio), hi.max(ratio))
            },
        );
        bracket = (lo - T::one(), hi - T::one());
        let next = norm - T::one();
        let change = (next - estimate).abs();
        estimate = next;
        w.iter_mut().for_each(|x| *x = *x / norm);
        v = w;
        if change < tol || hi - lo < tol {
            return (estimate.max(T::zero()), bracket, it, true);
        }
    }
    (estimate.max(T::zero()), bracket, max_iters, false)
}
