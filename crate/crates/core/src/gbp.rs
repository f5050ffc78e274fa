// SPDX-License-Identifier: Apache-2.0

//! Gaussian belief propagation on the information form.
//!
//! Messages are stored as `(P_{i->j}, P_{i->j} mu_{i->j})`; the mean of a
//! message is recovered only on demand, so singular message precisions
//! never need inverting. Likewise the node prior is kept as the product
//! `P_ii mu_ii = alpha_i`, which stays defined for nodes without a self
//! measurement.
//!
//! Round `t` at node `i`:
//!
//! ```text
//! P_i      = P_ii + sum_v P_{v->i}
//! mu_i     = P_i^-1 (alpha_i + sum_v P_{v->i} mu_{v->i})
//! P_0      = P_ii + sum_{v != j} P_{v->i}                 (re-summed per j)
//! h_0      = alpha_i + sum_{v != j} P_{v->i} mu_{v->i}
//! P_{i->j} = Gamma_ji - Psi_ji (Gamma_ij + P_0)^-1 Psi_ij
//! P_{i->j} mu_{i->j} = -Psi_ji (Gamma_ij + P_0)^-1 h_0
//! ```
//!
//! Inversions use [`Lu`].

use rayon::prelude::*;

use crate::analysis::trace::{
    drive, Algorithm, Breakdown, BreakdownKind, MessageRecord, RoundEngine, RoundRecord, RunOptions, RunTrace,
    TraceDetail,
};
use crate::error::Result;
use crate::graph::NodeId;
use crate::information::InformationSystem;
use crate::linalg::{Lu, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct GbpMessage<T> {
    /// `P_{i->j}`, `n_j x n_j`.
    pub precision: Matrix<T>,
    /// `P_{i->j} mu_{i->j}`, length `n_j`.
    pub information: Vec<T>,
}

impl<T: Scalar> GbpMessage<T> {
    /// `mu_{i->j}`, when the message precision is invertible.
    pub fn mean(&self) -> Option<Vec<T>> {
        Lu::new(&self.precision).ok().map(|lu| lu.solve(&self.information).expect("block order"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbpNodeState<T> {
    /// `P_ii`.
    pub p_self: Matrix<T>,
    /// `P_ii mu_ii`, i.e. `alpha_i`.
    pub h_self: Vec<T>,
    /// `P_i(t)`; `None` before the first round.
    pub p_belief: Option<Matrix<T>>,
    /// `mu_i(t)`; `None` before the first round.
    pub mu_belief: Option<Vec<T>>,
}

struct NodeOutput<T> {
    p_belief: Matrix<T>,
    mu_belief: Vec<T>,
    messages: Vec<GbpMessage<T>>,
    cavities: Vec<(Matrix<T>, Vec<T>)>,
}

pub struct GbpEngine<'a, T> {
    info: &'a InformationSystem<T>,
    round: usize,
    states: Vec<GbpNodeState<T>>,
    /// `outbox[i][k]`: message from `i` to `info.node(i).couplings[k].neighbor`.
    outbox: Vec<Vec<GbpMessage<T>>>,
    /// Last round's `(Gamma_ij + P_0, h_0)` per outgoing message.
    cavities: Vec<Vec<(Matrix<T>, Vec<T>)>>,
}

impl<'a, T: Scalar> GbpEngine<'a, T> {
    pub fn new(info: &'a InformationSystem<T>) -> Self {
        let states = info
            .nodes()
            .iter()
            .map(|node| GbpNodeState {
                p_self: node.self_precision.clone(),
                h_self: node.alpha.clone(),
                p_belief: None,
                mu_belief: None,
            })
            .collect();
        let outbox = info
            .nodes()
            .iter()
            .map(|node| {
                node.couplings
                    .iter()
                    .map(|c| GbpMessage {
                        precision: c.gamma_peer.clone(),
                        information: vec![T::zero(); c.gamma_peer.rows()],
                    })
                    .collect()
            })
            .collect();
        Self { info, round: 0, states, outbox, cavities: vec![Vec::new(); info.node_count()] }
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn states(&self) -> &[GbpNodeState<T>] {
        &self.states
    }

    pub fn message(&self, from: usize, to: usize) -> Option<&GbpMessage<T>> {
        let k = self.info.node(from).couplings.iter().position(|c| c.neighbor == to)?;
        Some(&self.outbox[from][k])
    }

    pub fn message_count(&self) -> usize {
        self.outbox.iter().map(Vec::len).sum()
    }

    fn update_node(&self, i: usize) -> std::result::Result<NodeOutput<T>, Breakdown> {
        let node = self.info.node(i);
        let state = &self.states[i];
        let round = self.round + 1;
        let breakdown = |neighbor: Option<usize>, kind| Breakdown {
            node: NodeId::from_index(i),
            neighbor: neighbor.map(NodeId::from_index),
            round,
            kind,
        };
        let incoming: Vec<&GbpMessage<T>> = node.couplings.iter().map(|c| &self.outbox[c.neighbor][c.mirror]).collect();

        let aggregate = |skip: Option<usize>| {
            let mut p = state.p_self.clone();
            let mut h = state.h_self.clone();
            for (k, m) in incoming.iter().enumerate() {
                if Some(k) == skip {
                    continue;
                }
                p = &p + &m.precision;
                h.iter_mut().zip(&m.information).for_each(|(a, b)| *a = *a + *b);
            }
            (p, h)
        };

        let (p_belief, h_belief) = aggregate(None);
        let mu_belief = Lu::new(&p_belief)
            .map_err(|_| breakdown(None, BreakdownKind::SingularPrecision))?
            .solve(&h_belief)
            .expect("block order");

        let mut messages = Vec::with_capacity(node.couplings.len());
        let mut cavities = Vec::with_capacity(node.couplings.len());
        for (k, c) in node.couplings.iter().enumerate() {
            let (p0, h0) = aggregate(Some(k));
            let m = &c.gamma + &p0;
            let lu = Lu::new(&m).map_err(|_| breakdown(Some(c.neighbor), BreakdownKind::SingularMessage))?;
            let gain = lu.solve_matrix(&c.psi).expect("block order");
            let precision = &c.gamma_peer - &c.psi_back.matmul(&gain);
            let information =
                c.psi_back.mul_vec(&lu.solve(&h0).expect("block order")).into_iter().map(|v| -v).collect();
            messages.push(GbpMessage { precision, information });
            cavities.push((m, h0));
        }
        Ok(NodeOutput { p_belief, mu_belief, messages, cavities })
    }

    /// One synchronous iteration. On breakdown the state is left untouched.
    pub fn step(&mut self, parallel: bool) -> std::result::Result<(), Breakdown> {
        let n = self.info.node_count();
        let outputs: Vec<_> = if parallel {
            (0..n).into_par_iter().map(|i| self.update_node(i)).collect()
        } else {
            (0..n).map(|i| self.update_node(i)).collect()
        };
        let outputs = outputs.into_iter().collect::<std::result::Result<Vec<_>, _>>()?;
        for (i, out) in outputs.into_iter().enumerate() {
            self.states[i].p_belief = Some(out.p_belief);
            self.states[i].mu_belief = Some(out.mu_belief);
            self.outbox[i] = out.messages;
            self.cavities[i] = out.cavities;
        }
        self.round += 1;
        Ok(())
    }

    /// `mu_i(t)` for every node; `None` before the first round.
    pub fn estimates(&self) -> Option<Vec<Vec<T>>> {
        self.states.iter().map(|s| s.mu_belief.clone()).collect()
    }

    fn record(&self, detail: TraceDetail) -> RoundRecord<T> {
        RoundRecord {
            round: self.round,
            estimates: self.estimates().expect("record after a round"),
            precisions: detail
                .precisions
                .then(|| self.states.iter().map(|s| s.p_belief.clone().expect("after a round")).collect()),
            messages: detail.messages.then(|| {
                self.info
                    .nodes()
                    .iter()
                    .enumerate()
                    .flat_map(|(i, node)| {
                        node.couplings.iter().zip(&self.cavities[i]).map(move |(c, (m, h))| MessageRecord {
                            from: NodeId::from_index(i),
                            to: NodeId::from_index(c.neighbor),
                            matrix: m.clone(),
                            vector: h.clone(),
                        })
                    })
                    .collect()
            }),
        }
    }
}

impl<T: Scalar> RoundEngine<T> for GbpEngine<'_, T> {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Gbp
    }

    fn instance(&self) -> u64 {
        self.info.fingerprint()
    }

    fn initial_record(&self, _detail: TraceDetail) -> Option<RoundRecord<T>> {
        None
    }

    fn advance(&mut self, detail: TraceDetail, parallel: bool) -> std::result::Result<RoundRecord<T>, Breakdown> {
        self.step(parallel)?;
        Ok(self.record(detail))
    }
}

/// Initializes and iterates Gaussian BP. The trace starts at round 1.
pub fn gbp_run<T: Scalar>(info: &InformationSystem<T>, options: &RunOptions<T>) -> Result<RunTrace<T>> {
    options.validate()?;
    let mut engine = GbpEngine::new(info);
    drive(&mut engine, options)
}
