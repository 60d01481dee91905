//! Randomized rank-revealing factorizations of full-rank matrices.

use crate::dense::{cpqr, qr_econ, spectral_norm, Matrix};
use crate::error::{dims, Result};
use crate::par;
use crate::rng;

/// Panel oversampling for pivot selection in `randomized_cpqr`.
pub const DEFAULT_PANEL_OVERSAMPLE: usize = 5;

/// `A = U R V'` with orthonormal `U` (m x n), upper-triangular `R` and orthogonal `V`.
#[derive(Debug, Clone)]
pub struct UrvFactorization {
    pub u: Matrix,
    pub r: Matrix,
    pub v: Matrix,
    pub q: usize,
}

impl UrvFactorization {
    /// `||A - U(:, :k) R(:k, :) V'||`, which equals `||R(k.., k..)||`.
    pub fn truncation_error(&self, k: usize) -> f64 {
        trailing_norm(&self.r, k)
    }

    pub fn reconstruct(&self) -> Matrix {
        &self.u * &self.r * self.v.transpose()
    }
}

/// `A[:, perm] = Q R`.
#[derive(Debug, Clone)]
pub struct CpqrFactorization {
    pub q: Matrix,
    pub r: Matrix,
    pub perm: Vec<usize>,
}

impl CpqrFactorization {
    /// `||A[:, perm] - Q(:, :k) R(:k, :)||`.
    pub fn truncation_error(&self, k: usize) -> f64 {
        trailing_norm(&self.r, k)
    }

    /// `Q R` with the permutation undone, i.e. `A` itself.
    pub fn reconstruct(&self) -> Matrix {
        let qr = &self.q * &self.r;
        let mut a = Matrix::zeros(qr.nrows(), qr.ncols());
        for (pos, &orig) in self.perm.iter().enumerate() {
            a.set_column(orig, &qr.column(pos));
        }
        a
    }
}

pub(crate) fn trailing_norm(r: &Matrix, k: usize) -> f64 {
    let (rows, cols) = r.shape();
    if k >= rows || k >= cols {
        return 0.0;
    }
    spectral_norm(&r.view((k, k), (rows - k, cols - k)).into_owned())
}

/// powerURV: `V = qr((A'A)^q Omega)`, then `[U, R] = qr(A V)`.
///
/// Every product with `A` or `A'` is re-orthonormalized. Right multiplication
/// by a triangular factor leaves the nested column spans unchanged, so this
/// does not change `V` in exact arithmetic, but without it the directions
/// below `sqrt(eps)` relative to `||A||` are lost at `q = 1` already.
pub fn power_urv(a: &Matrix, q: usize, seed: u64) -> Result<UrvFactorization> {
    let (m, n) = a.shape();
    if m < n {
        return dims(format!("power_urv needs m >= n, got {m}x{n}; factor the transpose"));
    }
    let mut y = rng::gaussian_matrix(&mut rng::stream(seed, 0), n, n);
    let reorth = q >= 1;
    for _ in 0..q {
        let mut ay = crate::dense::par_matmul(a, &y);
        if reorth {
            ay = qr_econ(&ay).0;
        }
        y = crate::dense::par_tr_matmul(a, &ay);
        if reorth {
            y = qr_econ(&y).0;
        }
    }
    let v = qr_econ(&y).0;
    let (u, r) = qr_econ(&crate::dense::par_matmul(a, &v));
    Ok(UrvFactorization { u, r, v, q })
}

/// How each panel's pivot sample is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanelSampler {
    /// Fresh `(b + p) x m'` Gaussian per panel.
    Gaussian,
    /// Use the trailing block itself; reproduces classical CPQR.
    Identity,
}

/// Blocked Householder QR whose pivots are chosen panel by panel from a
/// small random sample `Y = Omega A_trailing`.
pub fn randomized_cpqr(a: &Matrix, b: usize, p: usize, seed: u64) -> Result<CpqrFactorization> {
    randomized_cpqr_with(a, b, p, PanelSampler::Gaussian, seed)
}

pub fn randomized_cpqr_with(
    a: &Matrix,
    b: usize,
    p: usize,
    sampler: PanelSampler,
    seed: u64,
) -> Result<CpqrFactorization> {
    let (m, n) = a.shape();
    if b == 0 || b > n {
        return dims(format!("panel width b={b} must lie in 1..={n}"));
    }
    let steps = m.min(n);
    let mut w = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut taus = Vec::with_capacity(steps);
    let mut panel = 0u64;
    let mut j0 = 0;
    while j0 < steps {
        let bb = b.min(steps - j0);
        let trailing = w.view((j0, j0), (m - j0, n - j0)).into_owned();
        let y = match sampler {
            PanelSampler::Gaussian => {
                let omega = rng::gaussian_matrix(&mut rng::stream(seed, panel), bb + p, m - j0);
                omega * &trailing
            }
            PanelSampler::Identity => trailing,
        };
        let local = cpqr(&y, bb).perm;
        let cols: Vec<usize> = local.iter().map(|&c| j0 + c).collect();
        let block = Matrix::from_fn(m, cols.len(), |i, c| w[(i, cols[c])]);
        for c in 0..cols.len() {
            w.set_column(j0 + c, &block.column(c));
        }
        let moved: Vec<usize> = cols.iter().map(|&c| perm[c]).collect();
        perm[j0..].copy_from_slice(&moved);
        // Pivoting inside the chosen panel keeps |R_ii| decreasing within the block.
        for k in j0..j0 + bb {
            let best = (k..j0 + bb)
                .map(|j| (j, w.view((k, j), (m - k, 1)).norm_squared()))
                .fold((k, -1.0), |acc, (j, v)| if v > acc.1 { (j, v) } else { acc });
            if best.0 != k {
                w.swap_columns(k, best.0);
                perm.swap(k, best.0);
            }
            taus.push(householder_step(&mut w, k));
        }
        j0 += bb;
        panel += 1;
    }

    let mut r = Matrix::zeros(steps, n);
    for i in 0..steps {
        for j in i..n {
            r[(i, j)] = w[(i, j)];
        }
    }
    let q = accumulate_q(&w, &taus);
    Ok(CpqrFactorization { q, r, perm })
}

/// Householder reflector for column `k` of `w` below the diagonal, applied to
/// the trailing columns. The reflector is stored in place below the diagonal
/// with an implicit unit leading entry; returns its `tau`.
fn householder_step(w: &mut Matrix, k: usize) -> f64 {
    let (m, n) = w.shape();
    let alpha = w[(k, k)];
    let xnorm = w.view((k + 1, k), (m - k - 1, 1)).norm();
    if xnorm == 0.0 {
        return 0.0;
    }
    let beta = if alpha < 0.0 { alpha.hypot(xnorm) } else { -alpha.hypot(xnorm) };
    let tau = (beta - alpha) / beta;
    let inv = 1.0 / (alpha - beta);
    for i in (k + 1)..m {
        w[(i, k)] *= inv;
    }
    w[(k, k)] = beta;
    if k + 1 < n {
        let v: Vec<f64> = w.view((k + 1, k), (m - k - 1, 1)).iter().copied().collect();
        let data = &mut w.as_mut_slice()[(k + 1) * m..];
        par::for_each_chunk_mut(data, m, |_, col| {
            let mut s = col[k];
            for (vi, ci) in v.iter().zip(&col[k + 1..]) {
                s += vi * ci;
            }
            s *= tau;
            col[k] -= s;
            for (vi, ci) in v.iter().zip(col[k + 1..].iter_mut()) {
                *ci -= s * vi;
            }
        });
    }
    tau
}

fn accumulate_q(w: &Matrix, taus: &[f64]) -> Matrix {
    let m = w.nrows();
    let cols = taus.len();
    let mut q = Matrix::zeros(m, cols);
    for j in 0..cols {
        q[(j, j)] = 1.0;
    }
    let data = q.as_mut_slice();
    par::for_each_chunk_mut(data, m, |_, col| {
        for k in (0..cols).rev() {
            let tau = taus[k];
            if tau == 0.0 {
                continue;
            }
            let mut s = col[k];
            for i in (k + 1)..m {
                s += w[(i, k)] * col[i];
            }
            s *= tau;
            col[k] -= s;
            for i in (k + 1)..m {
                col[i] -= s * w[(i, k)];
            }
        }
    });
    q
}
