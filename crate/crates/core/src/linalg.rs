//! Shared dense linear-algebra helpers: guarded Cholesky factorizations,
//! symmetric eigendecompositions with relative truncation, and condition
//! estimates. All factorizations of nominally positive-definite matrices go
//! through [`cholesky_psd`] so the jitter policy lives in one place.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative jitter added to diagonals before factorizing nominally PD matrices.
pub const JITTER_REL: f64 = 1e-10;

/// Eigenvalues below this fraction of the largest one are treated as zero
/// when truncating a Gram factorization.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Most negative eigenvalue tolerated (relative to scale) before a matrix is
/// rejected as not positive semidefinite.
pub const PSD_REL_TOL: f64 = 1e-10;

/// Condition-number estimate beyond which a surrogate matrix is rejected.
pub const COND_LIMIT: f64 = 1e14;

/// Cholesky factorization with a single escalating jitter retry.
///
/// The jitter is `JITTER_REL * trace / dim`, applied to the diagonal. Returns
/// an error if the matrix still fails to factor after escalation.
pub fn cholesky_psd(m: &DMatrix<f64>, context: &'static str) -> Result<Cholesky<f64, Dyn>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Cholesky::new(DMatrix::zeros(0, 0)).expect("empty cholesky"));
    }
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok(c);
    }
    let base = JITTER_REL * m.trace().abs().max(f64::MIN_POSITIVE) / n as f64;
    let mut jitter = base;
    for _ in 0..3 {
        let mut jittered = m.clone();
        for i in 0..n {
            jittered[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(jittered) {
            return Ok(c);
        }
        jitter *= 100.0;
    }
    Err(Error::NotPositiveDefinite { context })
}

/// Symmetric eigendecomposition returning `(eigenvalues, eigenvectors)` with
/// eigenvalues sorted in descending order and eigenvectors as columns.
pub fn symmetric_eigen_sorted(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let eig = m.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
    });
    let values = DVector::from_fn(n, |i, _| eig.eigenvalues[idx[i]]);
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &j) in idx.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(j));
    }
    (values, vectors)
}

/// Factor a symmetric PSD matrix as `F^T F` with `F` of shape `r x n`.
///
/// Eigenvalues at or below `rel_tol * lambda_max` are dropped; with
/// `rel_tol = 0` only non-positive eigenvalues are dropped. Returns an error
/// if the most negative eigenvalue is below `-PSD_REL_TOL * scale`, where
/// `scale` is the largest eigenvalue magnitude.
pub fn psd_factor(m: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let (values, vectors) = symmetric_eigen_sorted(m);
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min_eig = values[n - 1];
    if min_eig < -PSD_REL_TOL * scale {
        return Err(Error::NotPositiveSemidefinite { min_eig, scale });
    }
    let lambda_max = values[0].max(0.0);
    let cut = rel_tol * lambda_max;
    let r = values.iter().take_while(|&&v| v > cut && v > 0.0).count();
    let mut f = DMatrix::zeros(r, n);
    for i in 0..r {
        let s = values[i].sqrt();
        for j in 0..n {
            f[(i, j)] = s * vectors[(j, i)];
        }
    }
    Ok(f)
}

/// Condition estimate (eigenvalue ratio) of a symmetric matrix.
pub fn symmetric_condition(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 1.0;
    }
    let (values, _) = symmetric_eigen_sorted(m);
    let max = values[0].abs();
    let min = values[n - 1].abs();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let (values, _) = symmetric_eigen_sorted(m);
    values[n - 1]
}
