//! Monte-Carlo estimators of traces, norms and extremal eigenvalues.

mod norms;
mod spectral;

pub use norms::{frob_schatten4, schatten2p_kv, FrobSchatten4};
pub use spectral::{
    lanczos, lanczos_extremal_eig, power_max_eig, slq_trace_fn, LanczosDecomposition, LanczosEstimate,
    PowerEstimate, Which,
};

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dense::{require_orthonormal, LinearOperator, Matrix, Vector};
use crate::error::{mismatch, Error, Result};
use crate::par::compensated_sum;
use crate::rng;

/// Isotropic test-vector distributions, all with `E[w w'] = I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TestVectorDist {
    #[default]
    Gaussian,
    Rademacher,
    /// Uniform on the sphere of radius `sqrt(n)`.
    #[serde(rename = "sphere")]
    ScaledSphere,
}

impl TestVectorDist {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R, n: usize) -> Vector {
        match self {
            TestVectorDist::Gaussian => rng::gaussian_vector(rng, n),
            TestVectorDist::Rademacher => Vector::from_fn(n, |_, _| rng::rademacher(rng)),
            TestVectorDist::ScaledSphere => {
                let g = rng::gaussian_vector(rng, n);
                let norm = g.norm();
                if norm == 0.0 {
                    let mut e = Vector::zeros(n);
                    e[0] = (n as f64).sqrt();
                    e
                } else {
                    g * ((n as f64).sqrt() / norm)
                }
            }
        }
    }
}

/// Sample mean, sample variance and (optionally) the samples themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub estimate: f64,
    /// Unbiased per-sample variance; absent for a single sample.
    pub sample_variance: Option<f64>,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_sample: Option<Vec<f64>>,
}

impl EstimatorReport {
    pub fn from_samples(xs: Vec<f64>) -> Self {
        let k = xs.len();
        let mean = compensated_sum(xs.iter().copied()) / k as f64;
        let sample_variance = if k >= 2 {
            Some(compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (k - 1) as f64)
        } else {
            None
        };
        Self {
            estimate: mean,
            sample_variance,
            samples: k,
            per_sample: Some(xs),
        }
    }

    /// Standard error of the mean, `sqrt(S_k / k)`.
    pub fn standard_error(&self) -> Option<f64> {
        self.sample_variance.map(|v| (v / self.samples as f64).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Girard-Hutchinson trace estimate `k^{-1} sum_i w_i' A w_i`.
pub fn trace_estimate<A: LinearOperator + ?Sized>(a: &A, k: usize, dist: TestVectorDist, seed: u64) -> Result<EstimatorReport> {
    let n = a.nrows();
    if a.ncols() != n {
        return mismatch(format!("trace of a {}x{} operator", n, a.ncols()));
    }
    if k == 0 {
        return Err(Error::InsufficientSamples { need: 1, got: 0 });
    }
    let xs = crate::par::map_range(k, |i| {
        let w = dist.draw(&mut rng::stream(seed, i as u64), n);
        w.dot(&a.apply(&w))
    });
    Ok(EstimatorReport::from_samples(xs))
}

/// Quantile of sorted data by linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Bootstrap interval `[mean + q_alpha, mean + q_{1-alpha}]` at level `1 - 2 alpha`
/// from `b` resampled-mean errors.
pub fn bootstrap_trace_ci(samples: &[f64], b: usize, alpha: f64, seed: u64) -> Result<ConfidenceInterval> {
    let k = samples.len();
    if k < 2 {
        return Err(Error::InsufficientSamples { need: 2, got: k });
    }
    if b == 0 || !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidArgument(format!("bootstrap needs B >= 1 and 0 < alpha < 0.5 (B={b}, alpha={alpha})")));
    }
    let mean = compensated_sum(samples.iter().copied()) / k as f64;
    let mut errs = crate::par::map_range(b, |r| {
        let mut g = rng::stream(seed, r as u64);
        compensated_sum((0..k).map(|_| samples[g.random_range(0..k)])) / k as f64 - mean
    });
    errs.sort_by(f64::total_cmp);
    Ok(ConfidenceInterval {
        lo: mean + quantile_sorted(&errs, alpha),
        hi: mean + quantile_sorted(&errs, 1.0 - alpha),
        level: 1.0 - 2.0 * alpha,
    })
}

/// Defaults for the bootstrap: at least 30 samples and 1000 replicates.
pub const BOOTSTRAP_MIN_SAMPLES: usize = 30;
pub const BOOTSTRAP_REPLICATES: usize = 1000;
pub const BOOTSTRAP_ALPHA: f64 = 0.025;

/// Student-t interval `mean -/+ t_{k-1, 1-alpha} sqrt(S_k / k)` at level `1 - 2 alpha`.
pub fn student_t_ci(report: &EstimatorReport, alpha: f64) -> Result<ConfidenceInterval> {
    let k = report.samples;
    let se = report.standard_error().ok_or(Error::InsufficientSamples { need: 2, got: k })?;
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 0.5), got {alpha}")));
    }
    let t = StudentsT::new(0.0, 1.0, (k - 1) as f64)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .inverse_cdf(1.0 - alpha);
    Ok(ConfidenceInterval {
        lo: report.estimate - t * se,
        hi: report.estimate + t * se,
        level: 1.0 - 2.0 * alpha,
    })
}

/// A posteriori error of a range basis from `s` Gaussian probes of the residual
/// `(I - QQ')A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorError {
    /// Unbiased estimate of `||(I - QQ')A||_F^2`.
    pub frob_est: f64,
    /// Largest probe residual norm; a heuristic spectral-norm proxy.
    pub spec_est: f64,
}

pub const POSTERIOR_PROBES: usize = 10;

pub fn posterior_error<A: LinearOperator + ?Sized>(a: &A, q: &Matrix, s: usize, seed: u64) -> Result<PosteriorError> {
    if s == 0 {
        return Err(Error::InvalidArgument("posterior_error needs s >= 1".into()));
    }
    if q.nrows() != a.nrows() {
        return mismatch(format!("basis has {} rows, operator has {}", q.nrows(), a.nrows()));
    }
    require_orthonormal(q, 1e-10)?;
    let phi = rng::gaussian_matrix(&mut rng::stream(seed, 0), a.ncols(), s);
    let z = a.apply_mat(&phi);
    let resid = &z - q * q.tr_mul(&z);
    let norms: Vec<f64> = (0..s).map(|j| resid.column(j).norm_squared()).collect();
    Ok(PosteriorError {
        frob_est: compensated_sum(norms.iter().copied()) / s as f64,
        spec_est: norms.iter().copied().fold(0.0, f64::max).sqrt(),
    })
}
