use serde::{Deserialize, Serialize};

use crate::dense::{require_orthonormal, spectral_norm, Matrix};
use crate::error::{mismatch, Error, Result};
use crate::rng::{self, AliasTable};

/// Sampling distribution `p_i = ||U_{i,:}||^2 / k` of an orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeverageScores {
    pub probabilities: Vec<f64>,
}

pub fn leverage_scores(u: &Matrix) -> Result<LeverageScores> {
    require_orthonormal(u, 1e-10)?;
    let k = u.ncols();
    if k == 0 {
        return Err(Error::DegenerateDistribution);
    }
    let probabilities = (0..u.nrows()).map(|i| u.row(i).norm_squared() / k as f64).collect();
    Ok(LeverageScores { probabilities })
}

/// `I * max_i ||B_{:,i}||^2` for `B` with `I` columns. Meaningful when `||B|| = 1`.
pub fn coherence(b: &Matrix) -> f64 {
    let max = (0..b.ncols()).map(|i| b.column(i).norm_squared()).fold(0.0, f64::max);
    b.ncols() as f64 * max
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatmulMode {
    Uniform,
    /// `p_i` proportional to `||B_{:,i}||^2/||B||^2 + ||C_{i,:}||^2/||C||^2`.
    Importance,
}

/// Sampling probabilities used by `approx_matmul`.
pub fn matmul_probabilities(b: &Matrix, c: &Matrix, mode: MatmulMode) -> Result<Vec<f64>> {
    let inner = b.ncols();
    if c.nrows() != inner {
        return mismatch(format!("inner dimensions differ: {} vs {}", inner, c.nrows()));
    }
    match mode {
        MatmulMode::Uniform => Ok(vec![1.0 / inner as f64; inner]),
        MatmulMode::Importance => {
            // the balancing formula assumes unit spectral norms; rescaling makes it scale-free
            let nb = spectral_norm(b);
            let nc = spectral_norm(c);
            let wb = if nb > 0.0 { 1.0 / (nb * nb) } else { 0.0 };
            let wc = if nc > 0.0 { 1.0 / (nc * nc) } else { 0.0 };
            let w: Vec<f64> = (0..inner)
                .map(|i| wb * b.column(i).norm_squared() + wc * c.row(i).norm_squared())
                .collect();
            let total: f64 = w.iter().sum();
            if !(total > 0.0) {
                return Err(Error::DegenerateDistribution);
            }
            Ok(w.into_iter().map(|x| x / total).collect())
        }
    }
}

/// Average of `k` independent rank-one estimators `p_i^{-1} B_{:,i} C_{i,:}`.
pub fn approx_matmul(b: &Matrix, c: &Matrix, k: usize, mode: MatmulMode, seed: u64) -> Result<Matrix> {
    if k == 0 {
        return Err(Error::InvalidArgument("approx_matmul needs k >= 1".into()));
    }
    let p = matmul_probabilities(b, c, mode)?;
    let table = AliasTable::new(&p).ok_or(Error::DegenerateDistribution)?;
    let mut r = rng::stream(seed, 0);
    let mut counts = vec![0usize; p.len()];
    for _ in 0..k {
        counts[table.sample(&mut r)] += 1;
    }
    Ok(weighted_product(b, c, &counts, &p, k))
}

/// `B diag(count_i / (k p_i)) C`, the estimator for a given outcome multiset.
pub(crate) fn weighted_product(b: &Matrix, c: &Matrix, counts: &[usize], p: &[f64], k: usize) -> Matrix {
    let used: Vec<usize> = (0..counts.len()).filter(|&i| counts[i] > 0).collect();
    let mut bs = Matrix::zeros(b.nrows(), used.len());
    let mut cs = Matrix::zeros(used.len(), c.ncols());
    for (t, &i) in used.iter().enumerate() {
        let w = counts[i] as f64 / (k as f64 * p[i]);
        bs.set_column(t, &(b.column(i) * w));
        cs.set_row(t, &c.row(i));
    }
    crate::dense::par_matmul(&bs, &cs)
}
