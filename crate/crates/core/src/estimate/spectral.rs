use serde::{Deserialize, Serialize};

use super::{EstimatorReport, TestVectorDist};
use crate::dense::{eig_sym_tridiag, LinearOperator, Matrix, Vector, MACHINE_EPS};
use crate::error::{mismatch, Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    /// Final Rayleigh quotient.
    pub xi: f64,
    /// Number of products with A.
    pub iterations: usize,
    /// `A w = 0` for the random start; `xi` is then reported as 0.
    pub zero_start: bool,
    /// Rayleigh quotients `xi_0, xi_1, ...`.
    pub history: Vec<f64>,
}

/// Randomized power method with relative stopping tolerance `tol` (0 disables it).
pub fn power_max_eig<A: LinearOperator + ?Sized>(a: &A, q_max: usize, tol: f64, seed: u64) -> Result<PowerEstimate> {
    let n = a.nrows();
    if a.ncols() != n {
        return mismatch(format!("power method needs a square operator, got {}x{}", n, a.ncols()));
    }
    if q_max == 0 {
        return Err(Error::InvalidArgument("power method needs q >= 1".into()));
    }
    let w = rng::gaussian_vector(&mut rng::stream(seed, 0), n);
    let mut y = &w / w.norm();
    let mut history = Vec::with_capacity(q_max);
    for i in 1..=q_max {
        let ay = a.apply(&y);
        let xi = y.dot(&ay);
        let nrm = ay.norm();
        history.push(xi);
        if nrm == 0.0 {
            return Ok(PowerEstimate { xi: 0.0, iterations: i, zero_start: i == 1, history });
        }
        y = ay / nrm;
        if i >= 2 && (xi - history[i - 2]).abs() <= tol * xi {
            return Ok(PowerEstimate { xi, iterations: i, zero_start: false, history });
        }
    }
    Ok(PowerEstimate { xi: *history.last().expect("q_max >= 1"), iterations: q_max, zero_start: false, history })
}

/// Lanczos tridiagonalization from a given start vector.
#[derive(Debug, Clone)]
pub struct LanczosDecomposition {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Orthonormal Lanczos vectors, one per entry of `alpha`.
    pub basis: Matrix,
}

/// Run up to `steps` Lanczos iterations (clamped to `n`), stopping when
/// `beta_i < mu sqrt(n)`; `reorth` applies double Gram-Schmidt against all
/// previous vectors.
pub fn lanczos<A: LinearOperator + ?Sized>(a: &A, start: &Vector, steps: usize, reorth: bool) -> LanczosDecomposition {
    let n = a.nrows();
    let steps = steps.min(n);
    let mut q: Vec<Vector> = vec![start / start.norm()];
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let floor = MACHINE_EPS * (n as f64).sqrt();
    for i in 0..steps {
        let mut v = a.apply(&q[i]);
        let ai = q[i].dot(&v);
        alpha.push(ai);
        v.axpy(-ai, &q[i], 1.0);
        if i > 0 {
            v.axpy(-beta[i - 1], &q[i - 1], 1.0);
        }
        if reorth {
            for _ in 0..2 {
                let coeffs: Vec<f64> = q.iter().map(|qj| qj.dot(&v)).collect();
                for (qj, c) in q.iter().zip(coeffs) {
                    v.axpy(-c, qj, 1.0);
                }
            }
        }
        let bi = v.norm();
        if bi < floor || i + 1 == steps {
            break;
        }
        beta.push(bi);
        q.push(v / bi);
    }
    let basis = Matrix::from_columns(&q[..alpha.len()]);
    beta.truncate(alpha.len().saturating_sub(1));
    LanczosDecomposition { alpha, beta, basis }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    #[default]
    Max,
    Min,
}

#[derive(Debug, Clone)]
pub struct LanczosEstimate {
    pub xi: f64,
    /// Ritz vector for `xi`.
    pub y: Vector,
    /// Size of the tridiagonal matrix actually built.
    pub iterations: usize,
}

/// Extremal Ritz value of the randomized Lanczos method.
pub fn lanczos_extremal_eig<A: LinearOperator + ?Sized>(a: &A, q: usize, reorth: bool, which: Which, seed: u64) -> Result<LanczosEstimate> {
    let n = a.nrows();
    if a.ncols() != n {
        return mismatch(format!("Lanczos needs a square operator, got {}x{}", n, a.ncols()));
    }
    if q == 0 {
        return Err(Error::InvalidArgument("Lanczos needs q >= 1".into()));
    }
    let w = rng::gaussian_vector(&mut rng::stream(seed, 0), n);
    let dec = lanczos(a, &w, q, reorth);
    let (vals, vecs) = eig_sym_tridiag(&dec.alpha, &dec.beta)?;
    let ind = match which {
        Which::Max => vals.len() - 1,
        Which::Min => 0,
    };
    Ok(LanczosEstimate {
        xi: vals[ind],
        y: &dec.basis * vecs.column(ind),
        iterations: dec.alpha.len(),
    })
}

/// Stochastic Lanczos quadrature estimate of `trace f(A)`, using `q + 1`
/// quadrature nodes per sample. Samples are scaled by `||w_i||^2` so the
/// estimator is unbiased for every isotropic distribution.
pub fn slq_trace_fn<A, F>(a: &A, f: F, k: usize, q: usize, dist: TestVectorDist, seed: u64) -> Result<EstimatorReport>
where
    A: LinearOperator + ?Sized,
    F: Fn(f64) -> f64 + Sync + Send,
{
    let n = a.nrows();
    if a.ncols() != n {
        return mismatch(format!("SLQ needs a square operator, got {}x{}", n, a.ncols()));
    }
    if k == 0 || q == 0 {
        return Err(Error::InvalidArgument("SLQ needs k >= 1 and q >= 1".into()));
    }
    let zs: Vec<Result<f64>> = crate::par::map_range(k, |i| {
        let w = dist.draw(&mut rng::stream(seed, i as u64), n);
        let wn2 = w.norm_squared();
        if wn2 == 0.0 {
            return Ok(0.0);
        }
        let dec = lanczos(a, &w, q + 1, true);
        let (theta, v) = eig_sym_tridiag(&dec.alpha, &dec.beta)?;
        let scale = theta.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let mut z = 0.0;
        for (l, &t) in theta.iter().enumerate() {
            if t < -1e-10 * scale.max(1.0) {
                return Err(Error::FunctionDomain(t));
            }
            let tau = v[(0, l)];
            z += tau * tau * f(t.max(0.0));
        }
        Ok(wn2 * z)
    });
    let zs: Result<Vec<f64>> = zs.into_iter().collect();
    Ok(EstimatorReport::from_samples(zs?))
}
