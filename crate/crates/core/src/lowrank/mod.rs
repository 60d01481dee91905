//! Low-rank factorizations built on the rangefinder.

mod id;
mod nystrom;
mod stream;
#[cfg(test)]
mod tests;

pub use id::{cur, randomized_id, row_id, two_sided_id, Cur, IdSide, InterpolativeDecomposition, TwoSidedId};
pub use nystrom::{nystrom, nystrom_with_test_matrix, Nystrom};
pub use stream::{
    stream_finalize, stream_init, stream_update, CoreMethod, SingleViewSvd, StreamEnvelope, StreamSketch,
    StreamUpdate,
};

use crate::dense::{from_svd, select_columns, select_rows, svd_econ, LinearOperator, Matrix, Svd};
use crate::error::{dims, Result};
use crate::rangefinder::power_rangefinder;

/// Relative floor below which computed singular values are treated as zero.
pub const TRUNCATION_FLOOR: f64 = 1e-12;

/// A factored low-rank approximation.
#[derive(Debug, Clone)]
pub enum LowRankFactorization {
    Qb { q: Matrix, b: Matrix },
    Svd(Svd),
    RowId(InterpolativeDecomposition),
    ColId(InterpolativeDecomposition),
    TwoSidedId(TwoSidedId),
    Cur(Cur),
    Nystrom(Nystrom),
}

impl LowRankFactorization {
    /// Dense product of the factors.
    pub fn reconstruct(&self) -> Matrix {
        match self {
            Self::Qb { q, b } => q * b,
            Self::Svd(s) => from_svd(&s.u, &s.s, &s.v),
            Self::RowId(f) | Self::ColId(f) => f.reconstruct(),
            Self::TwoSidedId(f) => f.reconstruct(),
            Self::Cur(f) => f.reconstruct(),
            Self::Nystrom(f) => f.reconstruct(),
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            Self::Qb { q, .. } => q.ncols(),
            Self::Svd(s) => s.s.len(),
            Self::RowId(f) | Self::ColId(f) => f.indices.len(),
            Self::TwoSidedId(f) => f.rows.len(),
            Self::Cur(f) => f.rows.len(),
            Self::Nystrom(f) => f.lambda.len(),
        }
    }
}

/// Keep at most `k` modes, dropping any below `TRUNCATION_FLOOR * s[0]`.
pub fn truncate_svd(svd: &Svd, k: usize) -> Svd {
    let floor = svd.s.first().map_or(0.0, |s| s * TRUNCATION_FLOOR);
    let keep = svd.s.iter().take(k).take_while(|&&s| s > floor && s > 0.0).count();
    Svd {
        u: svd.u.columns(0, keep).into_owned(),
        s: svd.s[..keep].to_vec(),
        v: svd.v.columns(0, keep).into_owned(),
    }
}

/// Randomized SVD output before truncation, together with the range basis.
#[derive(Debug, Clone)]
pub struct RsvdFull {
    pub q: Matrix,
    pub svd: Svd,
}

/// Untruncated randomized SVD with `l` samples and `q` power steps. The
/// error of `U S V'` equals the error of `Q Q' B`.
pub fn rsvd_full<B: LinearOperator + ?Sized>(b: &B, l: usize, q: usize, seed: u64) -> Result<RsvdFull> {
    let basis = power_rangefinder(b, l, q, seed)?;
    let c = b.apply_adjoint_mat(&basis.q).transpose();
    let small = svd_econ(&c);
    let u = &basis.q * &small.u;
    Ok(RsvdFull { q: basis.q, svd: Svd { u, s: small.s, v: small.v } })
}

/// Randomized SVD truncated to rank `k`, using `k + p` samples.
pub fn rsvd<B: LinearOperator + ?Sized>(b: &B, k: usize, p: usize, q: usize, seed: u64) -> Result<Svd> {
    let (m, n) = (b.nrows(), b.ncols());
    if k == 0 || k + p > m.min(n) {
        return dims(format!("need 1 <= k and k + p <= {}, got k={k}, p={p}", m.min(n)));
    }
    let full = rsvd_full(b, k + p, q, seed)?;
    Ok(truncate_svd(&full.svd, k))
}

pub(crate) fn skeleton_block(a: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    select_columns(&select_rows(a, rows), cols)
}
