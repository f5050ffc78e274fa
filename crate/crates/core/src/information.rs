// SPDX-License-Identifier: Apache-2.0

//! Information form of a measurement graph.
//!
//! For node `i` with incident edges `(i, j)`:
//!
//! ```text
//! alpha_i = A_i' R_i^-1 z_i + sum_j B_ij' R_ij^-1 z_ij
//! Psi_ii  = A_i' R_i^-1 A_i + sum_j Gamma_ij,   Gamma_ij = B_ij' R_ij^-1 B_ij
//! Psi_ij  = B_ij' R_ij^-1 B_ji
//! ```
//!
//! Every block of node `i` is computed from node `i`'s own self measurement
//! and its incident edge measurements only. [`StackedSystem`] keeps the
//! global `z = H x + v` form for cross-checks.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::graph::{MeasurementGraph, NodeId};
use crate::linalg::{Cholesky, Matrix};
use crate::scalar::Scalar;

/// One endpoint's view of an edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling<T> {
    /// 0-based index of the neighbor `j`.
    pub neighbor: usize,
    /// Index of the edge in the graph's edge order.
    pub edge: usize,
    /// Position of the reverse coupling `(j, i)` in the neighbor's list.
    pub mirror: usize,
    /// `Psi_ij`, `n_i x n_j`.
    pub psi: Matrix<T>,
    /// `Psi_ji = Psi_ij'`, `n_j x n_i`.
    pub psi_back: Matrix<T>,
    /// `Gamma_ij = B_ij' R^-1 B_ij`, `n_i x n_i`.
    pub gamma: Matrix<T>,
    /// `Gamma_ji = B_ji' R^-1 B_ji`, `n_j x n_j`.
    pub gamma_peer: Matrix<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeInfo<T> {
    pub dim: usize,
    pub alpha: Vec<T>,
    pub psi_diag: Matrix<T>,
    /// `P_ii = A_i' R_i^-1 A_i` (zero when the node has no self measurement).
    pub self_precision: Matrix<T>,
    pub couplings: Vec<Coupling<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InformationSystem<T> {
    nodes: Vec<NodeInfo<T>>,
    fingerprint: u64,
}

fn symmetrized<T: Scalar>(m: &Matrix<T>) -> Matrix<T> {
    let half = T::one() / T::two();
    Matrix::from_fn(m.rows(), m.cols(), |i, j| (m[(i, j)] + m[(j, i)]) * half)
}

fn covariance_inverse<T: Scalar>(r: &Matrix<T>, what: impl Fn() -> String) -> Result<Matrix<T>> {
    Cholesky::new(r).map(|c| c.inverse()).map_err(|_| Error::CovarianceNotPd { what: what() })
}

fn assemble_node<T: Scalar>(g: &MeasurementGraph<T>, index: usize) -> Result<NodeInfo<T>> {
    let id = NodeId::from_index(index);
    let dim = g.nodes()[index].dim;
    let sm = &g.self_measurements()[index];

    let (self_precision, mut alpha) = if sm.rows() == 0 {
        (Matrix::zeros(dim, dim), vec![T::zero(); dim])
    } else {
        let r_inv = covariance_inverse(&sm.r, || format!("self measurement of node {id}"))?;
        let w = sm.a.tr_matmul(&r_inv);
        (symmetrized(&w.matmul(&sm.a)), w.mul_vec(&sm.z))
    };

    let mut psi_diag = self_precision.clone();
    let mut couplings = Vec::with_capacity(g.incidences(index).len());
    for inc in g.incidences(index) {
        let e = &g.edges()[inc.edge];
        let r_inv = covariance_inverse(&e.r, || format!("edge ({}, {})", e.i, e.j))?;
        let (own, other) = e.blocks_from(id);
        let w_own = own.tr_matmul(&r_inv);
        let w_other = other.tr_matmul(&r_inv);
        let gamma = symmetrized(&w_own.matmul(own));
        let psi = w_own.matmul(other);
        let mirror =
            g.incidences(inc.neighbor).iter().position(|back| back.edge == inc.edge).expect("adjacency is symmetric");
        let contribution = w_own.mul_vec(&e.z);
        alpha.iter_mut().zip(contribution).for_each(|(a, c)| *a = *a + c);
        psi_diag = &psi_diag + &gamma;
        couplings.push(Coupling {
            neighbor: inc.neighbor,
            edge: inc.edge,
            mirror,
            psi_back: psi.transpose(),
            psi,
            gamma,
            gamma_peer: symmetrized(&w_other.matmul(other)),
        });
    }

    Ok(NodeInfo { dim, alpha, psi_diag, self_precision, couplings })
}

impl<T: Scalar> InformationSystem<T> {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, index: usize) -> &NodeInfo<T> {
        &self.nodes[index]
    }

    pub fn nodes(&self) -> &[NodeInfo<T>] {
        &self.nodes
    }

    pub fn dims(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.dim).collect()
    }

    pub fn is_scalar(&self) -> bool {
        self.nodes.iter().all(|n| n.dim == 1)
    }

    /// First node whose state is not scalar, with its dimension.
    pub fn first_vector_node(&self) -> Option<(NodeId, usize)> {
        self.nodes.iter().enumerate().find(|(_, n)| n.dim != 1).map(|(i, n)| (NodeId::from_index(i), n.dim))
    }

    /// Offset of every node's block in the stacked state `x = col{x_1, ..., x_n}`.
    pub fn offsets(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .scan(0, |acc, n| {
                let off = *acc;
                *acc += n.dim;
                Some(off)
            })
            .collect()
    }

    pub fn total_dim(&self) -> usize {
        self.nodes.iter().map(|n| n.dim).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.couplings.len()).sum::<usize>() / 2
    }

    /// `Psi_ij` for `i != j` when the nodes are adjacent.
    pub fn psi(&self, i: usize, j: usize) -> Option<&Matrix<T>> {
        self.coupling(i, j).map(|c| &c.psi)
    }

    pub fn gamma(&self, i: usize, j: usize) -> Option<&Matrix<T>> {
        self.coupling(i, j).map(|c| &c.gamma)
    }

    pub fn coupling(&self, i: usize, j: usize) -> Option<&Coupling<T>> {
        self.nodes.get(i)?.couplings.iter().find(|c| c.neighbor == j)
    }

    /// Dense `Psi`.
    pub fn dense_psi(&self) -> Matrix<T> {
        let offsets = self.offsets();
        let n = self.total_dim();
        let mut psi = Matrix::zeros(n, n);
        for (i, node) in self.nodes.iter().enumerate() {
            psi.set_block(offsets[i], offsets[i], &node.psi_diag);
            for c in &node.couplings {
                psi.set_block(offsets[i], offsets[c.neighbor], &c.psi);
            }
        }
        psi
    }

    /// Dense `alpha`.
    pub fn dense_alpha(&self) -> Vec<T> {
        self.nodes.iter().flat_map(|n| n.alpha.iter().copied()).collect()
    }

    /// Deterministic hash of the blocks, used to tell traces of different
    /// instances apart.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    fn compute_fingerprint(nodes: &[NodeInfo<T>]) -> u64 {
        let mut h = DefaultHasher::new();
        let put = |m: &[T], h: &mut DefaultHasher| {
            for v in m {
                v.to_f64_lossless().to_bits().hash(h);
            }
        };
        for node in nodes {
            node.dim.hash(&mut h);
            put(&node.alpha, &mut h);
            put(node.psi_diag.as_slice(), &mut h);
            for c in &node.couplings {
                c.neighbor.hash(&mut h);
                put(c.psi.as_slice(), &mut h);
            }
        }
        h.finish()
    }
}

/// Builds the per-node information blocks.
pub fn assemble_information<T: Scalar>(g: &MeasurementGraph<T>) -> Result<InformationSystem<T>> {
    let nodes = (0..g.node_count()).map(|i| assemble_node(g, i)).collect::<Result<Vec<_>>>()?;
    let fingerprint = InformationSystem::compute_fingerprint(&nodes);
    Ok(InformationSystem { nodes, fingerprint })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSource {
    SelfMeasurement(NodeId),
    Edge(NodeId, NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowBlock {
    pub source: RowSource,
    pub start: usize,
    pub rows: usize,
}

/// `z = H x + v`, rows ordered `z_1, ..., z_n, z_e1, ..., z_ep`.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedSystem<T> {
    pub h: Matrix<T>,
    pub r: Matrix<T>,
    pub z: Vec<T>,
    pub row_blocks: Vec<RowBlock>,
    pub col_offsets: Vec<usize>,
}

pub fn assemble_stacked<T: Scalar>(g: &MeasurementGraph<T>) -> Result<StackedSystem<T>> {
    let dims = g.dims();
    let col_offsets: Vec<usize> = dims
        .iter()
        .scan(0, |acc, d| {
            let off = *acc;
            *acc += d;
            Some(off)
        })
        .collect();
    let cols: usize = dims.iter().sum();
    let rows: usize = g.self_measurements().iter().map(|m| m.rows()).sum::<usize>()
        + g.edges().iter().map(|e| e.rows()).sum::<usize>();

    let mut h = Matrix::zeros(rows, cols);
    let mut r = Matrix::zeros(rows, rows);
    let mut z = Vec::with_capacity(rows);
    let mut row_blocks = Vec::new();
    let mut start = 0;

    for (i, m) in g.self_measurements().iter().enumerate() {
        if m.rows() == 0 {
            continue;
        }
        h.set_block(start, col_offsets[i], &m.a);
        r.set_block(start, start, &m.r);
        z.extend_from_slice(&m.z);
        row_blocks.push(RowBlock { source: RowSource::SelfMeasurement(m.node), start, rows: m.rows() });
        start += m.rows();
    }
    for e in g.edges() {
        h.set_block(start, col_offsets[e.i.index()], &e.b_ij);
        h.set_block(start, col_offsets[e.j.index()], &e.b_ji);
        r.set_block(start, start, &e.r);
        z.extend_from_slice(&e.z);
        row_blocks.push(RowBlock { source: RowSource::Edge(e.i, e.j), start, rows: e.rows() });
        start += e.rows();
    }

    Ok(StackedSystem { h, r, z, row_blocks, col_offsets })
}

impl<T: Scalar> StackedSystem<T> {
    /// `R^-1`, inverted block by block.
    pub fn r_inverse(&self) -> Result<Matrix<T>> {
        let n = self.r.rows();
        let mut inv = Matrix::zeros(n, n);
        for b in &self.row_blocks {
            let block = self.r.block(b.start, b.start, b.rows, b.rows);
            let what = || format!("{:?}", b.source);
            inv.set_block(b.start, b.start, &covariance_inverse(&block, what)?);
        }
        Ok(inv)
    }

    /// `(H' R^-1 H, H' R^-1 z)`.
    pub fn normal_equations(&self) -> Result<(Matrix<T>, Vec<T>)> {
        let w = self.h.tr_matmul(&self.r_inverse()?);
        Ok((w.matmul(&self.h), w.mul_vec(&self.z)))
    }
}
