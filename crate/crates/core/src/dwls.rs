// SPDX-License-Identifier: Apache-2.0

//! Distributed WLS message passing on self and edge measurements.
//!
//! Initialization: `x_hat_i(0) = Psi_ii^-1 alpha_i`, and every node sends
//! `Sigma_{i->j}(0) = Psi_ii^-1`, `x_{i->j}(0) = Sigma_{i->j}(0) alpha_i`.
//!
//! Round `t` at node `i`, from round `t-1` messages only:
//!
//! ```text
//! Psi_hat_i   = Psi_ii  - sum_v Psi_vi' Sigma_{v->i} Psi_vi
//! alpha_hat_i = alpha_i - sum_v Psi_vi' x_{v->i}
//! x_hat_i     = Psi_hat_i^-1 alpha_hat_i
//! Sigma_{i->j} = (Psi_hat_i + Psi_ji' Sigma_{j->i} Psi_ji)^-1
//! x_{i->j}     = Sigma_{i->j} (alpha_hat_i + Psi_ji' x_{j->i})
//! ```
//!
//! Per-node blocks are factored with [`Ldlt`].

use rayon::prelude::*;

use crate::analysis::trace::{
    drive, Algorithm, Breakdown, BreakdownKind, MessageRecord, RoundEngine, RoundRecord, RunOptions, RunTrace,
    TraceDetail,
};
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::information::InformationSystem;
use crate::linalg::{Ldlt, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct DwlsMessage<T> {
    /// `Sigma_{i->j}`, `n_i x n_i`.
    pub sigma: Matrix<T>,
    /// `x_{i->j}`, length `n_i`.
    pub x: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DwlsNodeState<T> {
    pub psi_hat: Matrix<T>,
    pub alpha_hat: Vec<T>,
    pub x_hat: Vec<T>,
}

pub struct DwlsEngine<'a, T> {
    info: &'a InformationSystem<T>,
    round: usize,
    states: Vec<DwlsNodeState<T>>,
    /// `outbox[i][k]`: message from `i` to `info.node(i).couplings[k].neighbor`.
    outbox: Vec<Vec<DwlsMessage<T>>>,
}

type NodeUpdate<T> = (DwlsNodeState<T>, Vec<DwlsMessage<T>>);

impl<'a, T: Scalar> DwlsEngine<'a, T> {
    pub fn new(info: &'a InformationSystem<T>) -> Result<Self> {
        let mut states = Vec::with_capacity(info.node_count());
        let mut outbox = Vec::with_capacity(info.node_count());
        for (i, node) in info.nodes().iter().enumerate() {
            let factor =
                Ldlt::new(&node.psi_diag).map_err(|_| Error::LocallyUnidentifiable { node: NodeId::from_index(i) })?;
            let sigma = factor.inverse();
            let x_hat = sigma.mul_vec(&node.alpha);
            outbox.push(vec![DwlsMessage { sigma: sigma.clone(), x: x_hat.clone() }; node.couplings.len()]);
            states.push(DwlsNodeState { psi_hat: node.psi_diag.clone(), alpha_hat: node.alpha.clone(), x_hat });
        }
        Ok(Self { info, round: 0, states, outbox })
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn states(&self) -> &[DwlsNodeState<T>] {
        &self.states
    }

    pub fn estimates(&self) -> Vec<Vec<T>> {
        self.states.iter().map(|s| s.x_hat.clone()).collect()
    }

    /// Message currently held from `from` to `to` (0-based), if adjacent.
    pub fn message(&self, from: usize, to: usize) -> Option<&DwlsMessage<T>> {
        let k = self.info.node(from).couplings.iter().position(|c| c.neighbor == to)?;
        Some(&self.outbox[from][k])
    }

    pub fn message_count(&self) -> usize {
        self.outbox.iter().map(Vec::len).sum()
    }

    /// Node `i`'s round computation. Reads `Psi_ii`, `alpha_i`, the
    /// couplings of its incident edges, and its inbound messages.
    fn update_node(&self, i: usize) -> std::result::Result<NodeUpdate<T>, Breakdown> {
        let node = self.info.node(i);
        let round = self.round + 1;
        let breakdown = |neighbor: Option<usize>, kind| Breakdown {
            node: NodeId::from_index(i),
            neighbor: neighbor.map(NodeId::from_index),
            round,
            kind,
        };

        let inbound: Vec<&DwlsMessage<T>> = node.couplings.iter().map(|c| &self.outbox[c.neighbor][c.mirror]).collect();

        // Psi_vi' Sigma_{v->i} Psi_vi with Psi_vi' = Psi_iv
        let absorbed: Vec<Matrix<T>> = node
            .couplings
            .iter()
            .zip(&inbound)
            .map(|(c, m)| c.psi.matmul(&m.sigma).matmul(&c.psi.transpose()))
            .collect();
        let shifted: Vec<Vec<T>> = node.couplings.iter().zip(&inbound).map(|(c, m)| c.psi.mul_vec(&m.x)).collect();

        let mut psi_hat = node.psi_diag.clone();
        for a in &absorbed {
            psi_hat = &psi_hat - a;
        }
        let mut alpha_hat = node.alpha.clone();
        for s in &shifted {
            alpha_hat.iter_mut().zip(s).for_each(|(a, v)| *a = *a - *v);
        }

        if node.dim == 1 && !(psi_hat[(0, 0)] > T::zero()) {
            return Err(breakdown(None, BreakdownKind::NonPositivePrecision));
        }
        let factor = Ldlt::new(&psi_hat).map_err(|_| breakdown(None, BreakdownKind::SingularPrecision))?;
        let x_hat = factor.solve(&alpha_hat).expect("block order");

        let mut out = Vec::with_capacity(node.couplings.len());
        for (k, c) in node.couplings.iter().enumerate() {
            // add back the j-term to exclude neighbor j
            let cavity = &psi_hat + &absorbed[k];
            let sigma =
                Ldlt::new(&cavity).map_err(|_| breakdown(Some(c.neighbor), BreakdownKind::SingularMessage))?.inverse();
            let rhs: Vec<T> = alpha_hat.iter().zip(&shifted[k]).map(|(a, s)| *a + *s).collect();
            let x = sigma.mul_vec(&rhs);
            out.push(DwlsMessage { sigma, x });
        }

        Ok((DwlsNodeState { psi_hat, alpha_hat, x_hat }, out))
    }

    /// One synchronous iteration. On breakdown the state is left untouched.
    pub fn step(&mut self, parallel: bool) -> std::result::Result<(), Breakdown> {
        let n = self.info.node_count();
        let updates: Vec<_> = if parallel {
            (0..n).into_par_iter().map(|i| self.update_node(i)).collect()
        } else {
            (0..n).map(|i| self.update_node(i)).collect()
        };
        let updates = updates.into_iter().collect::<std::result::Result<Vec<_>, _>>()?;
        let (states, outbox) = updates.into_iter().unzip();
        self.states = states;
        self.outbox = outbox;
        self.round += 1;
        Ok(())
    }

    fn record(&self, detail: TraceDetail) -> RoundRecord<T> {
        RoundRecord {
            round: self.round,
            estimates: self.estimates(),
            precisions: detail.precisions.then(|| self.states.iter().map(|s| s.psi_hat.clone()).collect()),
            messages: detail.messages.then(|| {
                self.info
                    .nodes()
                    .iter()
                    .enumerate()
                    .flat_map(|(i, node)| {
                        node.couplings.iter().zip(&self.outbox[i]).map(move |(c, m)| MessageRecord {
                            from: NodeId::from_index(i),
                            to: NodeId::from_index(c.neighbor),
                            matrix: m.sigma.clone(),
                            vector: m.x.clone(),
                        })
                    })
                    .collect()
            }),
        }
    }
}

impl<T: Scalar> RoundEngine<T> for DwlsEngine<'_, T> {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Dwls
    }

    fn instance(&self) -> u64 {
        self.info.fingerprint()
    }

    fn initial_record(&self, detail: TraceDetail) -> Option<RoundRecord<T>> {
        Some(self.record(detail))
    }

    fn advance(&mut self, detail: TraceDetail, parallel: bool) -> std::result::Result<RoundRecord<T>, Breakdown> {
        self.step(parallel)?;
        Ok(self.record(detail))
    }
}

/// Initializes and iterates the distributed WLS algorithm.
///
/// Round 0 of the trace is the initialization estimate `Psi_ii^-1 alpha_i`.
/// A breakdown ends the run and is reported through [`RunTrace::stop`].
pub fn dwls_run<T: Scalar>(info: &InformationSystem<T>, options: &RunOptions<T>) -> Result<RunTrace<T>> {
    options.validate()?;
    let mut engine = DwlsEngine::new(info)?;
    drive(&mut engine, options)
}
