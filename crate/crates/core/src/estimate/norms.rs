use serde::{Deserialize, Serialize};

use super::{EstimatorReport, TestVectorDist};
use crate::dense::{LinearOperator, Matrix};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrobSchatten4 {
    /// Samples `||B w_i||^2`; the mean estimates `||B||_F^2`.
    pub frob_sq: EstimatorReport,
    /// `S_k / 2`, which estimates `||B||_4^4` for Gaussian test vectors.
    pub schatten4_4: f64,
}

/// Squared Frobenius norm from `k` isotropic probes, with the Schatten-4
/// estimate read off the sample variance.
pub fn frob_schatten4<B: LinearOperator + ?Sized>(b: &B, k: usize, dist: TestVectorDist, seed: u64) -> Result<FrobSchatten4> {
    if k < 2 {
        return Err(Error::InsufficientSamples { need: 2, got: k });
    }
    let n = b.ncols();
    let xs = crate::par::map_range(k, |i| {
        let w = dist.draw(&mut rng::stream(seed, i as u64), n);
        b.apply(&w).norm_squared()
    });
    let frob_sq = EstimatorReport::from_samples(xs);
    let schatten4_4 = frob_sq.sample_variance.unwrap_or(0.0) / 2.0;
    Ok(FrobSchatten4 { frob_sq, schatten4_4 })
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Kong-Valiant estimate `binom(k,p)^{-1} trace[T(X)^{p-1} X]` of `||B||_{2p}^{2p}`,
/// where `X = Y'Y`, `Y = B Omega` with `k` Gaussian columns, and `T` takes the
/// strict upper triangle.
pub fn schatten2p_kv(b: &Matrix, p: usize, k: usize, seed: u64) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidArgument("order p must be at least 1".into()));
    }
    if p > k {
        return Err(Error::InvalidOrder { p, k });
    }
    let cols = crate::par::map_range(k, |i| rng::gaussian_vector(&mut rng::stream(seed, i as u64), b.ncols()));
    let omega = Matrix::from_columns(&cols);
    let y = crate::dense::par_matmul(b, &omega);
    Ok(kv_from_gram(&y.tr_mul(&y), p))
}

pub(crate) fn kv_from_gram(x: &Matrix, p: usize) -> f64 {
    let k = x.nrows();
    let t = Matrix::from_fn(k, k, |i, j| if j > i { x[(i, j)] } else { 0.0 });
    // T^{p-1} by repeated squaring
    let mut e = p - 1;
    let mut base = t;
    let mut pow = Matrix::identity(k, k);
    while e > 0 {
        if e & 1 == 1 {
            pow = &pow * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    (pow * x).trace() / binomial(k, p)
}
