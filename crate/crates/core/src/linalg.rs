//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Moore-Penrose inverse of a symmetric matrix via its eigendecomposition.
/// Eigenvalues below `dim * |lambda_max| * 1e-12` are treated as zero.
/// Returns the inverse and its rank.
pub fn pseudo_inverse_sym(a: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    pseudo_inverse_sym_rel(a, a.nrows() as f64 * 1e-12)
}

/// As [`pseudo_inverse_sym`] with cutoff `rel * |lambda_max|`.
pub fn pseudo_inverse_sym_rel(a: &DMatrix<f64>, rel: f64) -> (DMatrix<f64>, usize) {
    let n = a.nrows();
    if n == 0 {
        return (DMatrix::zeros(0, 0), 0);
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = rel * top;
    let mut rank = 0;
    let inv = eig.eigenvalues.map(|v| {
        if v.abs() > tol {
            rank += 1;
            1.0 / v
        } else {
            0.0
        }
    });
    (
        &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose(),
        rank,
    )
}

/// Smallest eigenvalue of the symmetric part of `a`.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Inverse of a symmetric positive definite matrix.
pub fn spd_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (a + a.transpose()) * 0.5;
    let min = min_eigenvalue(&sym);
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    sym.cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::NotPositiveDefinite { min_eigenvalue: min })
}

/// Principal submatrix on `idx`.
pub fn submatrix(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| a[(idx[r], idx[c])])
}

pub fn subvector(v: &[f64], idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&j| v[j]))
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}
