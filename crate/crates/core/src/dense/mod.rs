//! Dense matrices, the matrix-free operator abstraction, and the
//! deterministic factorizations the randomized algorithms are built from.

mod factor;
mod operator;

pub use factor::{
    cholesky, cpqr, eig_sym, eig_sym_tridiag, orth, orth_with_tol, pinv_solve, pinv_solve_right,
    qr_econ, solve_lower, solve_upper, spectral_norm, svd_econ, Cpqr, Svd, ORTH_RANK_TOL,
    PINV_RANK_TOL,
};
pub use operator::{Adjoint, Gram, LinearOperator};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Unit roundoff used by stopping and truncation tests.
pub const MACHINE_EPS: f64 = f64::EPSILON;

/// Columns per work item in `par_matmul`. Fixed so the blocking, and hence
/// the floating-point result, does not depend on the number of threads.
const MATMUL_BLOCK: usize = 16;

/// Reject matrices with NaN or infinite entries.
pub fn check_finite(a: &Matrix) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if !a[(i, j)].is_finite() {
                return Err(Error::NonFinite(i, j));
            }
        }
    }
    Ok(())
}

/// `a * b`, split over column blocks of `b`.
pub fn par_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.ncols(), b.nrows(), "par_matmul: inner dimensions differ");
    let (m, n) = (a.nrows(), b.ncols());
    if m == 0 || n == 0 {
        return Matrix::zeros(m, n);
    }
    if n <= MATMUL_BLOCK || m * a.ncols() < 4096 {
        return a * b;
    }
    let mut out = Matrix::zeros(m, n);
    crate::par::for_each_chunk_mut(out.as_mut_slice(), m * MATMUL_BLOCK, |blk, chunk| {
        let j0 = blk * MATMUL_BLOCK;
        let w = chunk.len() / m;
        let prod = a * b.columns(j0, w);
        chunk.copy_from_slice(prod.as_slice());
    });
    out
}

/// `a' * b`, split over column blocks of `b`.
pub fn par_tr_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.nrows(), b.nrows(), "par_tr_matmul: inner dimensions differ");
    let (m, n) = (a.ncols(), b.ncols());
    if m == 0 || n == 0 {
        return Matrix::zeros(m, n);
    }
    if n <= MATMUL_BLOCK || m * a.nrows() < 4096 {
        return a.tr_mul(b);
    }
    let mut out = Matrix::zeros(m, n);
    crate::par::for_each_chunk_mut(out.as_mut_slice(), m * MATMUL_BLOCK, |blk, chunk| {
        let j0 = blk * MATMUL_BLOCK;
        let w = chunk.len() / m;
        let prod = a.tr_mul(&b.columns(j0, w));
        chunk.copy_from_slice(prod.as_slice());
    });
    out
}

/// Horizontal concatenation.
pub fn hstack(blocks: &[&Matrix]) -> Matrix {
    let m = blocks.first().map_or(0, |b| b.nrows());
    let n: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(m, n);
    let mut j = 0;
    for b in blocks {
        assert_eq!(b.nrows(), m, "hstack: row counts differ");
        out.columns_mut(j, b.ncols()).copy_from(*b);
        j += b.ncols();
    }
    out
}

/// Select columns by index.
pub fn select_columns(a: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(a.nrows(), idx.len(), |i, j| a[(i, idx[j])])
}

/// Select rows by index.
pub fn select_rows(a: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(idx.len(), a.ncols(), |i, j| a[(idx[i], j)])
}

/// Largest entrywise deviation of `q' q` from the identity.
pub fn orthonormality_defect(q: &Matrix) -> f64 {
    let g = q.tr_mul(q);
    let mut worst = 0.0f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Fail with `NotOrthonormal` unless `q` has orthonormal columns to `tol`.
pub fn require_orthonormal(q: &Matrix, tol: f64) -> Result<()> {
    let d = orthonormality_defect(q);
    if d > tol {
        Err(Error::NotOrthonormal(d))
    } else {
        Ok(())
    }
}

/// Matrix `u diag(s) v'`.
pub fn from_svd(u: &Matrix, s: &[f64], v: &Matrix) -> Matrix {
    let mut us = u.clone();
    for (j, &sj) in s.iter().enumerate() {
        us.column_mut(j).scale_mut(sj);
    }
    us * v.transpose()
}

/// Random dense matrix with prescribed singular values and Haar-distributed
/// singular vectors; used by tests, benches and the CLI spectrum generator.
pub fn with_spectrum<R: rand::Rng + ?Sized>(rng: &mut R, m: usize, n: usize, sigma: &[f64]) -> Matrix {
    let r = sigma.len();
    assert!(r <= m.min(n), "with_spectrum: too many singular values");
    let u = qr_econ(&crate::rng::gaussian_matrix(rng, m, r)).0;
    let v = qr_econ(&crate::rng::gaussian_matrix(rng, n, r)).0;
    from_svd(&u, sigma, &v)
}

/// Random symmetric psd matrix with prescribed eigenvalues.
pub fn psd_with_spectrum<R: rand::Rng + ?Sized>(rng: &mut R, n: usize, lambda: &[f64]) -> Matrix {
    let u = qr_econ(&crate::rng::gaussian_matrix(rng, n, lambda.len())).0;
    let a = from_svd(&u, lambda, &u);
    (&a + a.transpose()) * 0.5
}
