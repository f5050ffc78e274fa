// SPDX-License-Identifier: Apache-2.0

//! Measurement networks: nodes with state dimensions, self measurements
//! `z_i = A_i x_i + v_i`, and pairwise edge measurements
//! `z_e = B_ij x_i + B_ji x_j + v_e`.
//!
//! A [`MeasurementGraph`] is validated once at construction and immutable
//! afterwards. Node ids are 1-based ([`NodeId`]); internal storage is
//! 0-based and exposed as `usize` indices where the engines need it.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::scalar::Scalar;

/// 1-based node identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn from_index(index: usize) -> Self {
        Self(index + 1)
    }

    /// 0-based storage index.
    ///
    /// Panics on the invalid id 0.
    pub fn index(self) -> usize {
        self.0.checked_sub(1).expect("node ids are 1-based")
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeSpec {
    pub id: NodeId,
    pub dim: usize,
}

/// `z_i = A_i x_i + v_i`, `v_i ~ N(0, R_i)`.
///
/// A node without a self measurement carries `A_i` with zero rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfMeasurement<T> {
    pub node: NodeId,
    pub a: Matrix<T>,
    pub r: Matrix<T>,
    pub z: Vec<T>,
}

impl<T: Scalar> SelfMeasurement<T> {
    pub fn absent(node: NodeId, dim: usize) -> Self {
        Self { node, a: Matrix::zeros(0, dim), r: Matrix::zeros(0, 0), z: Vec::new() }
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    /// True when the measurement carries information about the node.
    pub fn is_informative(&self) -> bool {
        self.rows() > 0 && !self.a.is_zero()
    }
}

/// `z_e = B_ij x_i + B_ji x_j + v_e`, `v_e ~ N(0, R_e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMeasurement<T> {
    pub i: NodeId,
    pub j: NodeId,
    pub b_ij: Matrix<T>,
    pub b_ji: Matrix<T>,
    pub r: Matrix<T>,
    pub z: Vec<T>,
}

impl<T: Scalar> EdgeMeasurement<T> {
    pub fn rows(&self) -> usize {
        self.z.len()
    }

    /// The observation block acting on `node` and the one acting on the
    /// other endpoint, from `node`'s point of view.
    pub fn blocks_from(&self, node: NodeId) -> (&Matrix<T>, &Matrix<T>) {
        if node == self.i {
            (&self.b_ij, &self.b_ji)
        } else {
            (&self.b_ji, &self.b_ij)
        }
    }

    pub fn other(&self, node: NodeId) -> NodeId {
        if node == self.i {
            self.j
        } else {
            self.i
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incidence {
    pub neighbor: usize,
    pub edge: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGraph<T> {
    nodes: Vec<NodeSpec>,
    self_measurements: Vec<SelfMeasurement<T>>,
    edges: Vec<EdgeMeasurement<T>>,
    adjacency: Vec<Vec<Incidence>>,
}

/// Collects nodes and measurements, then validates them in [`GraphBuilder::build`].
#[derive(Debug, Clone)]
pub struct GraphBuilder<T> {
    dims: Vec<usize>,
    self_measurements: Vec<SelfMeasurement<T>>,
    edges: Vec<EdgeMeasurement<T>>,
}

impl<T: Scalar> GraphBuilder<T> {
    /// Nodes `1..=dims.len()` with the given state dimensions.
    pub fn new(dims: Vec<usize>) -> Self {
        Self { dims, self_measurements: Vec::new(), edges: Vec::new() }
    }

    pub fn self_measurement(mut self, node: usize, a: Matrix<T>, r: Matrix<T>, z: Vec<T>) -> Self {
        self.self_measurements.push(SelfMeasurement { node: NodeId(node), a, r, z });
        self
    }

    pub fn edge(mut self, i: usize, j: usize, b_ij: Matrix<T>, b_ji: Matrix<T>, r: Matrix<T>, z: Vec<T>) -> Self {
        self.edges.push(EdgeMeasurement { i: NodeId(i), j: NodeId(j), b_ij, b_ji, r, z });
        self
    }

    /// Scalar self measurement `z = a x + v`, `Var(v) = r`.
    pub fn scalar_self(self, node: usize, a: T, r: T, z: T) -> Self {
        self.self_measurement(node, Matrix::scalar(a), Matrix::scalar(r), vec![z])
    }

    /// Scalar edge measurement `z = b_ij x_i + b_ji x_j + v`, `Var(v) = r`.
    pub fn scalar_edge(self, i: usize, j: usize, b_ij: T, b_ji: T, r: T, z: T) -> Self {
        self.edge(i, j, Matrix::scalar(b_ij), Matrix::scalar(b_ji), Matrix::scalar(r), vec![z])
    }

    pub fn build(self) -> Result<MeasurementGraph<T>> {
        MeasurementGraph::new(self.dims, self.self_measurements, self.edges)
    }
}

fn check_covariance<T: Scalar>(r: &Matrix<T>, what: impl Fn() -> String) -> Result<()> {
    if r.rows() == 0 {
        return Ok(());
    }
    if !r.is_square() || !r.is_symmetric(T::of(1e-12).max(T::epsilon() * T::of(8.0))) {
        return Err(Error::CovarianceNotPd { what: what() });
    }
    Cholesky::new(r).map(|_| ()).map_err(|_| Error::CovarianceNotPd { what: what() })
}

impl<T: Scalar> MeasurementGraph<T> {
    /// Validates and assembles a graph.
    ///
    /// `self_measurements` may omit nodes (treated as zero-row `A_i`) but may
    /// not list a node twice. Edge order is preserved as `e_1, ..., e_p`.
    pub fn new(
        dims: Vec<usize>,
        self_measurements: Vec<SelfMeasurement<T>>,
        edges: Vec<EdgeMeasurement<T>>,
    ) -> Result<Self> {
        let n = dims.len();
        if n == 0 {
            return Err(Error::InvalidInput("a measurement graph needs at least one node".into()));
        }
        if let Some(i) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidInput(format!("node {} has dimension 0", i + 1)));
        }
        let nodes: Vec<NodeSpec> =
            dims.iter().enumerate().map(|(i, &dim)| NodeSpec { id: NodeId::from_index(i), dim }).collect();

        let mut slots: Vec<Option<SelfMeasurement<T>>> = vec![None; n];
        for m in self_measurements {
            let node = m.node;
            if node.0 == 0 || node.0 > n {
                return Err(Error::UnknownNode(node));
            }
            let dim = dims[node.index()];
            if slots[node.index()].is_some() {
                return Err(Error::InvalidInput(format!("node {node} has more than one self measurement")));
            }
            let rows = m.a.rows();
            if m.a.cols() != dim || m.r.rows() != rows || m.r.cols() != rows || m.z.len() != rows {
                return Err(Error::InvalidInput(format!(
                    "self measurement of node {node}: A is {}x{}, R is {}x{}, z has {} entries, node dimension {dim}",
                    m.a.rows(),
                    m.a.cols(),
                    m.r.rows(),
                    m.r.cols(),
                    m.z.len()
                )));
            }
            check_covariance(&m.r, || format!("self measurement of node {node}"))?;
            slots[node.index()] = Some(m);
        }
        let self_measurements: Vec<SelfMeasurement<T>> = slots
            .into_iter()
            .enumerate()
            .map(|(i, m)| m.unwrap_or_else(|| SelfMeasurement::absent(NodeId::from_index(i), dims[i])))
            .collect();

        let mut adjacency = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for (k, e) in edges.iter().enumerate() {
            for id in [e.i, e.j] {
                if id.0 == 0 || id.0 > n {
                    return Err(Error::Validation(format!("edge ({}, {}) references missing node {id}", e.i, e.j)));
                }
            }
            if e.i == e.j {
                return Err(Error::InvalidInput(format!("edge ({}, {}) is a self loop", e.i, e.j)));
            }
            let key = (e.i.min(e.j), e.i.max(e.j));
            if !seen.insert(key) {
                return Err(Error::InvalidInput(format!(
                    "duplicate edge between {} and {}; stack the measurements into one edge",
                    key.0, key.1
                )));
            }
            let rows = e.z.len();
            let (di, dj) = (dims[e.i.index()], dims[e.j.index()]);
            if rows == 0
                || e.b_ij.rows() != rows
                || e.b_ij.cols() != di
                || e.b_ji.rows() != rows
                || e.b_ji.cols() != dj
                || e.r.rows() != rows
                || e.r.cols() != rows
            {
                return Err(Error::InvalidInput(format!("edge ({}, {}): inconsistent block dimensions", e.i, e.j)));
            }
            if e.b_ij.is_zero() || e.b_ji.is_zero() {
                return Err(Error::Validation(format!(
                    "edge ({}, {}): both observation blocks must be nonzero",
                    e.i, e.j
                )));
            }
            check_covariance(&e.r, || format!("edge ({}, {})", e.i, e.j))?;
            adjacency[e.i.index()].push(Incidence { neighbor: e.j.index(), edge: k });
            adjacency[e.j.index()].push(Incidence { neighbor: e.i.index(), edge: k });
        }

        Ok(Self { nodes, self_measurements, edges, adjacency })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn dims(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.dim).collect()
    }

    pub fn is_scalar(&self) -> bool {
        self.nodes.iter().all(|n| n.dim == 1)
    }

    /// Self measurement of every node, in node order (zero-row when absent).
    pub fn self_measurements(&self) -> &[SelfMeasurement<T>] {
        &self.self_measurements
    }

    pub fn self_measurement(&self, node: NodeId) -> Result<&SelfMeasurement<T>> {
        self.check_node(node)?;
        Ok(&self.self_measurements[node.index()])
    }

    pub fn edges(&self) -> &[EdgeMeasurement<T>] {
        &self.edges
    }

    /// Incident edges of the node at 0-based `index`, in edge order.
    pub fn incidences(&self, index: usize) -> &[Incidence] {
        &self.adjacency[index]
    }

    fn check_node(&self, node: NodeId) -> Result<()> {
        if node.0 == 0 || node.0 > self.nodes.len() {
            Err(Error::UnknownNode(node))
        } else {
            Ok(())
        }
    }

    /// `N_i`, sorted by id.
    pub fn neighbors(&self, node: NodeId) -> Result<BTreeSet<NodeId>> {
        self.check_node(node)?;
        Ok(self.adjacency[node.index()].iter().map(|inc| NodeId::from_index(inc.neighbor)).collect())
    }

    /// Hop distances from `source` (0-based); `None` for unreachable nodes.
    pub fn bfs_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.nodes.len()];
        let mut queue = VecDeque::from([source]);
        dist[source] = Some(0);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for inc in &self.adjacency[u] {
                if dist[inc.neighbor].is_none() {
                    dist[inc.neighbor] = Some(du + 1);
                    queue.push_back(inc.neighbor);
                }
            }
        }
        dist
    }

    pub fn component_count(&self) -> usize {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut count = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            for (v, d) in self.bfs_distances(start).into_iter().enumerate() {
                if d.is_some() {
                    seen[v] = true;
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_distances(0).iter().all(Option::is_some)
    }

    /// No undirected cycle: `|E| = |V| - #components`.
    pub fn is_acyclic(&self) -> bool {
        self.edges.len() + self.component_count() == self.nodes.len()
    }

    /// Eccentricity `d_i` of every node, in node order.
    pub fn eccentricities(&self) -> Result<Vec<usize>> {
        (0..self.nodes.len())
            .map(|s| {
                self.bfs_distances(s)
                    .into_iter()
                    .try_fold(0usize, |m, d| d.map(|d| m.max(d)))
                    .ok_or(Error::Disconnected)
            })
            .collect()
    }

    pub fn diameter(&self) -> Result<usize> {
        Ok(self.eccentricities()?.into_iter().max().unwrap_or(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_graph(n: usize, edges: &[(usize, usize)]) -> MeasurementGraph<f64> {
        let mut b = GraphBuilder::new(vec![1; n]).scalar_self(1, 1.0, 1.0, 0.0);
        for &(i, j) in edges {
            b = b.scalar_edge(i, j, 1.0, -1.0, 1.0, 0.0);
        }
        b.build().unwrap()
    }

    fn ids(v: &[usize]) -> BTreeSet<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn chain_neighbors() {
        let g = scalar_graph(3, &[(1, 2), (2, 3)]);
        assert_eq!(g.neighbors(NodeId(2)).unwrap(), ids(&[1, 3]));
        assert_eq!(g.neighbors(NodeId(1)).unwrap(), ids(&[2]));
        assert!(matches!(g.neighbors(NodeId(4)), Err(Error::UnknownNode(NodeId(4)))));
        assert!(matches!(g.neighbors(NodeId(0)), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn isolated_node_has_no_neighbors() {
        let g = scalar_graph(3, &[(1, 2)]);
        assert!(g.neighbors(NodeId(3)).unwrap().is_empty());
    }

    #[test]
    fn connectivity() {
        assert!(scalar_graph(5, &[(1, 2), (2, 3), (3, 4), (4, 5)]).is_connected());
        assert!(!scalar_graph(4, &[(1, 2), (3, 4)]).is_connected());
        assert!(scalar_graph(1, &[]).is_connected());
    }

    #[test]
    fn acyclicity() {
        assert!(scalar_graph(5, &[(1, 2), (1, 3), (1, 4), (1, 5)]).is_acyclic());
        assert!(!scalar_graph(3, &[(1, 2), (2, 3), (3, 1)]).is_acyclic());
        assert!(scalar_graph(4, &[(1, 2), (3, 4)]).is_acyclic());
    }

    #[test]
    fn diameter_of_chain_and_star() {
        assert_eq!(scalar_graph(5, &[(1, 2), (2, 3), (3, 4), (4, 5)]).diameter().unwrap(), 4);
        let star = scalar_graph(5, &[(1, 2), (1, 3), (1, 4), (1, 5)]);
        assert_eq!(star.diameter().unwrap(), 2);
        assert_eq!(star.eccentricities().unwrap(), vec![1, 2, 2, 2, 2]);
        assert!(matches!(scalar_graph(4, &[(1, 2), (3, 4)]).diameter(), Err(Error::Disconnected)));
        assert_eq!(scalar_graph(1, &[]).diameter().unwrap(), 0);
    }

    #[test]
    fn rejects_zero_observation_block() {
        let err =
            GraphBuilder::new(vec![1, 1]).scalar_self(1, 1.0, 1.0, 0.0).scalar_edge(1, 2, 1.0, 0.0, 1.0, 0.0).build();
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_duplicate_and_self_loop_edges() {
        let dup = GraphBuilder::new(vec![1, 1])
            .scalar_edge(1, 2, 1.0, 1.0, 1.0, 0.0)
            .scalar_edge(2, 1, 1.0, 1.0, 1.0, 0.0)
            .build();
        assert!(matches!(dup, Err(Error::InvalidInput(_))));
        let lp = GraphBuilder::new(vec![1, 1]).scalar_edge(1, 1, 1.0, 1.0, 1.0, 0.0).build();
        assert!(matches!(lp, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rejects_non_pd_covariance() {
        let bad = GraphBuilder::new(vec![1, 1]).scalar_edge(1, 2, 1.0, 1.0, 0.0, 0.0).build();
        match bad {
            Err(Error::CovarianceNotPd { what }) => assert!(what.contains("edge (1, 2)")),
            other => panic!("unexpected {other:?}"),
        }
        let asym = GraphBuilder::new(vec![2]).self_measurement(
            1,
            Matrix::identity(2),
            Matrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]),
            vec![0.0, 0.0],
        );
        assert!(matches!(asym.build(), Err(Error::CovarianceNotPd { .. })));
    }

    #[test]
    fn rejects_missing_node_and_bad_dims() {
        let missing = GraphBuilder::new(vec![1, 1]).scalar_edge(1, 3, 1.0, 1.0, 1.0, 0.0).build();
        assert!(matches!(missing, Err(Error::Validation(_))));
        assert!(GraphBuilder::<f64>::new(vec![1, 0]).build().is_err());
        assert!(GraphBuilder::<f64>::new(vec![]).build().is_err());
        let wrong = GraphBuilder::new(vec![2]).scalar_self(1, 1.0, 1.0, 0.0).build();
        assert!(matches!(wrong, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn absent_self_measurement_is_zero_row() {
        let g = scalar_graph(2, &[(1, 2)]);
        let m = g.self_measurement(NodeId(2)).unwrap();
        assert_eq!((m.a.rows(), m.a.cols()), (0, 1));
        assert!(!m.is_informative());
        assert!(g.self_measurement(NodeId(1)).unwrap().is_informative());
    }
}
