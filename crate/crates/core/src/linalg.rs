//! Small dense and sparse linear-algebra helpers on top of `faer`.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

pub type SparseMat = SparseColMat<usize, f64>;

/// Relative singular-value threshold used for every rank decision.
pub const RANK_TOL: f64 = 1e-9;

pub fn mat_from_rows(rows: &[Vec<f64>]) -> Mat<f64> {
    let ncols = rows.first().map_or(0, Vec::len);
    Mat::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Singular values in descending order.
pub fn singular_values(m: MatRef<'_, f64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    let mut s = m
        .singular_values()
        .map_err(|e| Error::Eigen(format!("singular value decomposition failed: {e:?}")))?;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Number of singular values above `rel_tol` times the largest.
pub fn numerical_rank(m: MatRef<'_, f64>, rel_tol: f64) -> Result<usize> {
    let s = singular_values(m)?;
    let Some(&max) = s.first() else { return Ok(0) };
    if max == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > rel_tol * max).count())
}

/// Dimension of the kernel of `m` (as a map on its columns).
pub fn nullity(m: MatRef<'_, f64>, rel_tol: f64) -> Result<usize> {
    Ok(m.ncols() - numerical_rank(m, rel_tol)?)
}

/// 2-norm condition number of a square matrix.
pub fn condition_number(m: MatRef<'_, f64>) -> Result<f64> {
    let s = singular_values(m)?;
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => Ok(hi / lo),
        _ => Ok(f64::INFINITY),
    }
}

/// Inverse of a square, well-conditioned dense matrix via LU.
pub fn inverse(m: MatRef<'_, f64>) -> Mat<f64> {
    let id = Mat::<f64>::identity(m.nrows(), m.ncols());
    m.partial_piv_lu().solve(&id)
}

/// Eigenvalues (ascending) and eigenvectors of a symmetric matrix.
pub fn sym_eigen(m: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let e = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("symmetric eigensolver failed: {e:?}")))?;
    let s = e.S();
    let vals = (0..m.nrows()).map(|i| s[i]).collect();
    Ok((vals, e.U().to_owned()))
}

pub fn max_abs(m: MatRef<'_, f64>) -> f64 {
    let mut v = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            v = v.max(m[(i, j)].abs());
        }
    }
    v
}

/// Builds a sparse matrix, summing duplicate entries.
pub fn sparse_from_triplets(
    nrows: usize,
    ncols: usize,
    entries: &[Triplet<usize, usize, f64>],
) -> Result<SparseMat> {
    SparseColMat::try_new_from_triplets(nrows, ncols, entries)
        .map_err(|e| Error::Internal(format!("sparse matrix construction failed: {e:?}")))
}

/// `y = A x` for a column-major sparse matrix.
pub fn spmv(a: &SparseMat, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    let cp = a.col_ptr();
    let ri = a.row_idx();
    let v = a.val();
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        for p in cp[j]..cp[j + 1] {
            y[ri[p]] += v[p] * xj;
        }
    }
    y
}

/// `y = A^T x`.
pub fn spmv_t(a: &SparseMat, x: &[f64]) -> Vec<f64> {
    let cp = a.col_ptr();
    let ri = a.row_idx();
    let v = a.val();
    (0..a.ncols())
        .map(|j| (cp[j]..cp[j + 1]).map(|p| v[p] * x[ri[p]]).sum())
        .collect()
}

pub fn to_dense(a: &SparseMat) -> Mat<f64> {
    let mut m = Mat::zeros(a.nrows(), a.ncols());
    let cp = a.col_ptr();
    let ri = a.row_idx();
    let v = a.val();
    for j in 0..a.ncols() {
        for p in cp[j]..cp[j + 1] {
            m[(ri[p], j)] += v[p];
        }
    }
    m
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
