// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

// Independent reference computations. Nothing here goes through the
// crate's own factorizations or block assembly.

use nalgebra::{DMatrix, DVector};
use netwls::{Graph, Matrix};

pub fn to_na(m: &Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn offsets(dims: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(dims.len());
    let mut acc = 0;
    for d in dims {
        out.push(acc);
        acc += d;
    }
    out
}

type RowBlock = (Vec<(usize, DMatrix<f64>)>, DMatrix<f64>, Vec<f64>);

/// Stacks `z = H x + v` straight from the graph: one row block per
/// informative self measurement, then one per edge.
pub fn stacked(g: &Graph) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let dims = g.dims();
    let off = offsets(&dims);
    let cols: usize = dims.iter().sum();
    let mut blocks: Vec<RowBlock> = Vec::new();
    for m in g.self_measurements() {
        if m.rows() > 0 {
            blocks.push((vec![(off[m.node.0 - 1], to_na(&m.a))], to_na(&m.r), m.z.clone()));
        }
    }
    for e in g.edges() {
        blocks.push((
            vec![(off[e.i.0 - 1], to_na(&e.b_ij)), (off[e.j.0 - 1], to_na(&e.b_ji))],
            to_na(&e.r),
            e.z.clone(),
        ));
    }
    let rows: usize = blocks.iter().map(|b| b.2.len()).sum();
    let mut h = DMatrix::zeros(rows, cols);
    let mut r = DMatrix::zeros(rows, rows);
    let mut z = DVector::zeros(rows);
    let mut at = 0;
    for (parts, cov, zz) in blocks {
        let k = zz.len();
        for (c, m) in parts {
            h.view_mut((at, c), (k, m.ncols())).copy_from(&m);
        }
        r.view_mut((at, at), (k, k)).copy_from(&cov);
        for (t, v) in zz.iter().enumerate() {
            z[at + t] = *v;
        }
        at += k;
    }
    (h, r, z)
}

/// Weighted least squares by whitening and an SVD solve.
pub fn dense_ls(g: &Graph) -> DVector<f64> {
    let (h, r, z) = stacked(g);
    let l = r.cholesky().expect("covariance").l();
    let hw = l.solve_lower_triangular(&h).unwrap();
    let zw = l.solve_lower_triangular(&z).unwrap();
    hw.svd(true, true).solve(&zw, 1e-14).unwrap()
}

/// Same problem through Householder QR of the whitened system.
pub fn dense_ls_qr(g: &Graph) -> DVector<f64> {
    let (h, r, z) = stacked(g);
    let l = r.cholesky().expect("covariance").l();
    let hw = l.solve_lower_triangular(&h).unwrap();
    let zw = l.solve_lower_triangular(&z).unwrap();
    let qr = hw.qr();
    let qtz = qr.q().transpose() * zw;
    qr.r().solve_upper_triangular(&qtz).unwrap()
}

/// `H^T R^-1 H` and `H^T R^-1 z` from the stacked form.
pub fn normal_equations(g: &Graph) -> (DMatrix<f64>, DVector<f64>) {
    let (h, r, z) = stacked(g);
    let ri = r.try_inverse().unwrap();
    (h.transpose() * &ri * &h, h.transpose() * ri * z)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// All-pairs hop distances by Floyd-Warshall.
pub fn hop_distances(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for e in g.edges() {
        let (a, b) = (e.i.0 - 1, e.j.0 - 1);
        d[a][b] = 1;
        d[b][a] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

pub fn flat(x: &[Vec<f64>]) -> Vec<f64> {
    x.iter().flatten().copied().collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
