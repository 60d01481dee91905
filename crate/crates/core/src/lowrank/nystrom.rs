//! Nystrom approximation of positive-semidefinite operators.

use crate::dense::{cholesky, from_svd, solve_lower, spectral_norm, svd_econ, LinearOperator, Matrix};
use crate::error::{dims, mismatch, Error, Result};
use crate::rng;
use crate::sketch::{make_sketch, Scaling, SketchKind};

/// `A ~ U diag(lambda) U'` with orthonormal `U` and nonnegative `lambda`.
#[derive(Debug, Clone)]
pub struct Nystrom {
    pub u: Matrix,
    pub lambda: Vec<f64>,
    /// Shift actually used to stabilize the Cholesky factorization.
    pub shift: f64,
}

impl Nystrom {
    pub fn reconstruct(&self) -> Matrix {
        from_svd(&self.u, &self.lambda, &self.u)
    }
}

const SYMMETRY_TOL: f64 = 1e-8;

/// Floating-point spacing at `x`.
fn spacing(x: f64) -> f64 {
    let x = x.abs();
    if !x.is_finite() {
        return f64::NAN;
    }
    f64::from_bits(x.to_bits() + 1) - x
}

fn check_symmetric<A: LinearOperator + ?Sized>(a: &A, seed: u64) -> Result<()> {
    let n = a.ncols();
    let mut g = rng::stream(rng::derive(seed, 0x5e), 0);
    let u = rng::gaussian_vector(&mut g, n);
    let v = rng::gaussian_vector(&mut g, n);
    let (au, av) = (a.apply(&u), a.apply(&v));
    let gap = (v.dot(&au) - u.dot(&av)).abs();
    let scale = au.norm() * v.norm() + av.norm() * u.norm();
    if gap > SYMMETRY_TOL * scale {
        return Err(Error::NotPsd(format!("operator is not symmetric: probe gap {gap:.3e}")));
    }
    Ok(())
}

/// Rank-`k` Nystrom approximation from `l` Gaussian samples.
pub fn nystrom<A: LinearOperator + ?Sized>(a: &A, k: usize, l: usize, seed: u64) -> Result<Nystrom> {
    let n = a.nrows();
    if a.ncols() != n {
        return dims(format!("Nystrom needs a square operator, got {}x{}", n, a.ncols()));
    }
    if k == 0 || k >= l || l > n {
        return dims(format!("need 1 <= k < l <= n, got k={k}, l={l}, n={n}"));
    }
    check_symmetric(a, seed)?;
    let omega = make_sketch(SketchKind::Gaussian, l, n, seed, Scaling::UnitVariance)?.test_matrix();
    nystrom_with_test_matrix(a, &omega, k)
}

/// Nystrom approximation for an explicit `n x l` test matrix.
pub fn nystrom_with_test_matrix<A: LinearOperator + ?Sized>(a: &A, omega: &Matrix, k: usize) -> Result<Nystrom> {
    let n = a.nrows();
    if omega.nrows() != n || a.ncols() != n {
        return mismatch(format!("test matrix has {} rows, operator is {}x{}", omega.nrows(), n, a.ncols()));
    }
    if k == 0 || k > omega.ncols() {
        return dims(format!("rank {k} exceeds the {} samples", omega.ncols()));
    }
    let y = a.apply_mat(omega);
    let mut nu = (n as f64).sqrt() * spacing(spectral_norm(&y));
    for attempt in 0..2 {
        let y_nu = &y + omega * nu;
        let mut core = omega.tr_mul(&y_nu);
        core = (&core + core.transpose()) * 0.5;
        match cholesky(&core) {
            Ok(l) => {
                let b = solve_lower(&l, &y_nu.transpose()).transpose();
                let svd = svd_econ(&b);
                let keep = k.min(svd.s.len());
                let lambda = svd.s[..keep].iter().map(|s| (s * s - nu).max(0.0)).collect();
                return Ok(Nystrom { u: svd.u.columns(0, keep).into_owned(), lambda, shift: nu });
            }
            Err(_) if attempt == 0 => nu *= 10.0,
            Err(e) => return Err(Error::NotPsd(format!("core matrix is not positive definite after shifting: {e}"))),
        }
    }
    unreachable!("loop returns on the second attempt")
}
