use nalgebra::SymmetricEigen;

use super::{Matrix, Vector};
use crate::error::{Error, Result};

/// Relative cutoff on |R_ii| / |R_11| for numerical rank in `orth`.
pub const ORTH_RANK_TOL: f64 = 1e-12;
/// Relative cutoff on |R_ii| / |R_11| for numerical rank in `pinv_solve`.
pub const PINV_RANK_TOL: f64 = 1e-10;

/// Economy QR `a = q r` with `q` of width min(m, n), via Householder reflections.
pub fn qr_econ(a: &Matrix) -> (Matrix, Matrix) {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return (Matrix::zeros(m, 0), Matrix::zeros(0, n));
    }
    let qr = a.clone().qr();
    (qr.q(), qr.r())
}

/// Thin singular value decomposition: `a = u diag(s) v'`, `s` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

pub fn svd_econ(a: &Matrix) -> Svd {
    let (m, n) = a.shape();
    let r = m.min(n);
    if r == 0 {
        return Svd {
            u: Matrix::zeros(m, 0),
            s: vec![],
            v: Matrix::zeros(n, 0),
        };
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v requested");
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]).then(i.cmp(&j)));
    Svd {
        u: Matrix::from_fn(m, r, |i, j| u[(i, order[j])]),
        s: order.iter().map(|&i| svd.singular_values[i].max(0.0)).collect(),
        v: Matrix::from_fn(n, r, |i, j| vt[(order[j], i)]),
    }
}

/// Spectral norm.
pub fn spectral_norm(a: &Matrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
pub fn eig_sym(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.nrows();
    if n == 0 {
        return (vec![], Matrix::zeros(0, 0));
    }
    let sym = (a + a.transpose()) * 0.5;
    let e = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| e.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta`, eigenvalues ascending.
pub fn eig_sym_tridiag(alpha: &[f64], beta: &[f64]) -> Result<(Vec<f64>, Matrix)> {
    let q = alpha.len();
    if beta.len() + 1 != q && !(q == 0 && beta.is_empty()) {
        return Err(Error::DimMismatch(format!(
            "tridiagonal: {} diagonal entries need {} off-diagonal entries, got {}",
            q,
            q.saturating_sub(1),
            beta.len()
        )));
    }
    let mut t = Matrix::from_diagonal(&Vector::from_column_slice(alpha));
    for (i, &b) in beta.iter().enumerate() {
        t[(i, i + 1)] = b;
        t[(i + 1, i)] = b;
    }
    Ok(eig_sym(&t))
}

/// Lower-triangular Cholesky factor `c` with `c c' = a`.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidDims(format!("cholesky of a {}x{} matrix", n, a.ncols())));
    }
    let scale = a.amax().max(f64::MIN_POSITIVE);
    for j in 0..n {
        for i in 0..j {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::InvalidArgument("cholesky input is not symmetric".into()));
            }
        }
    }
    let mut c = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= c[(j, k)] * c[(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let d = d.sqrt();
        c[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= c[(i, k)] * c[(j, k)];
            }
            c[(i, j)] = s / d;
        }
    }
    Ok(c)
}

/// Solve `l x = b` for lower-triangular `l`.
pub fn solve_lower(l: &Matrix, b: &Matrix) -> Matrix {
    l.solve_lower_triangular(b).expect("singular triangular factor")
}

/// Solve `r x = b` for upper-triangular `r`.
pub fn solve_upper(r: &Matrix, b: &Matrix) -> Matrix {
    r.solve_upper_triangular(b).expect("singular triangular factor")
}

/// Partial Householder QR with column pivoting, `a[:, perm] = q r`.
///
/// Pivots are chosen by largest remaining column norm (recomputed exactly at
/// every step), breaking ties toward the lowest index.
#[derive(Debug, Clone)]
pub struct Cpqr {
    /// Householder vectors, one per step, stored below the diagonal.
    reflectors: Matrix,
    taus: Vec<f64>,
    /// `steps x n` upper-trapezoidal factor in pivoted column order.
    pub r: Matrix,
    /// Column permutation: position j holds original column `perm[j]`.
    pub perm: Vec<usize>,
}

impl Cpqr {
    pub fn steps(&self) -> usize {
        self.taus.len()
    }

    /// Numerical rank relative to the first pivot.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let k = self.steps();
        if k == 0 {
            return 0;
        }
        let r11 = self.r[(0, 0)].abs();
        if r11 == 0.0 {
            return 0;
        }
        (0..k).take_while(|&i| self.r[(i, i)].abs() > rel_tol * r11).count()
    }

    /// First `cols` columns of the orthogonal factor.
    pub fn q(&self, cols: usize) -> Matrix {
        let m = self.reflectors.nrows();
        let cols = cols.min(self.steps());
        let mut q = Matrix::zeros(m, cols);
        for j in 0..cols {
            q[(j, j)] = 1.0;
        }
        for k in (0..cols).rev() {
            let tau = self.taus[k];
            if tau == 0.0 {
                continue;
            }
            for j in 0..cols {
                let mut s = q[(k, j)];
                for i in (k + 1)..m {
                    s += self.reflectors[(i, k)] * q[(i, j)];
                }
                s *= tau;
                q[(k, j)] -= s;
                for i in (k + 1)..m {
                    q[(i, j)] -= s * self.reflectors[(i, k)];
                }
            }
        }
        q
    }
}

/// Run up to `max_steps` pivoted Householder steps on `a`.
pub fn cpqr(a: &Matrix, max_steps: usize) -> Cpqr {
    let (m, n) = a.shape();
    let steps = max_steps.min(m).min(n);
    let mut w = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut taus = Vec::with_capacity(steps);
    let mut diag = Vec::with_capacity(steps);
    for k in 0..steps {
        let mut best = k;
        let mut best_norm = -1.0;
        for j in k..n {
            let nj = w.view((k, j), (m - k, 1)).norm_squared();
            if nj > best_norm {
                best_norm = nj;
                best = j;
            }
        }
        if best != k {
            w.swap_columns(k, best);
            perm.swap(k, best);
        }
        let alpha = w[(k, k)];
        let xnorm = w.view((k + 1, k), (m - k - 1, 1)).norm();
        if xnorm == 0.0 {
            taus.push(0.0);
            diag.push(alpha);
            continue;
        }
        let beta = -alpha.signum_or_one() * alpha.hypot(xnorm);
        let tau = (beta - alpha) / beta;
        let inv = 1.0 / (alpha - beta);
        for i in (k + 1)..m {
            w[(i, k)] *= inv;
        }
        for j in (k + 1)..n {
            let mut s = w[(k, j)];
            for i in (k + 1)..m {
                s += w[(i, k)] * w[(i, j)];
            }
            s *= tau;
            w[(k, j)] -= s;
            for i in (k + 1)..m {
                let v = w[(i, k)];
                w[(i, j)] -= s * v;
            }
        }
        taus.push(tau);
        diag.push(beta);
    }
    let mut r = Matrix::zeros(steps, n);
    for i in 0..steps {
        r[(i, i)] = diag[i];
        for j in (i + 1)..n {
            r[(i, j)] = w[(i, j)];
        }
    }
    let mut reflectors = Matrix::zeros(m, steps);
    for k in 0..steps {
        for i in (k + 1)..m {
            reflectors[(i, k)] = w[(i, k)];
        }
    }
    Cpqr { reflectors, taus, r, perm }
}

trait SignumOrOne {
    fn signum_or_one(self) -> f64;
}

impl SignumOrOne for f64 {
    fn signum_or_one(self) -> f64 {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

/// Orthonormal basis for the numerical range of `y`; columns whose pivot
/// falls below `ORTH_RANK_TOL * |R_11|` are dropped.
pub fn orth(y: &Matrix) -> Matrix {
    orth_with_tol(y, ORTH_RANK_TOL)
}

pub fn orth_with_tol(y: &Matrix, rel_tol: f64) -> Matrix {
    let f = cpqr(y, y.ncols());
    let r = f.rank(rel_tol);
    f.q(r)
}

/// Minimum-norm least-squares solution `x = a^+ b` through a complete
/// orthogonal decomposition; no explicit inverse is formed.
pub fn pinv_solve(a: &Matrix, b: &Matrix) -> Matrix {
    let (m, n) = a.shape();
    assert_eq!(m, b.nrows(), "pinv_solve: row counts differ");
    let f = cpqr(a, m.min(n));
    let r = f.rank(PINV_RANK_TOL);
    if r == 0 {
        return Matrix::zeros(n, b.ncols());
    }
    let q1 = f.q(r);
    // [R11 R12]' = Z T, so a[:, perm] = Q1 T' Z'
    let top = f.r.rows(0, r).transpose();
    let (z, t) = qr_econ(&top);
    let rhs = q1.tr_mul(b);
    let y = t.transpose().solve_lower_triangular(&rhs).expect("nonsingular by rank cut");
    let xp = z * y;
    let mut x = Matrix::zeros(n, b.ncols());
    for (pos, &orig) in f.perm.iter().enumerate() {
        x.row_mut(orig).copy_from(&xp.row(pos));
    }
    x
}

/// `b a^+`, the right-sided analogue of `pinv_solve`.
pub fn pinv_solve_right(b: &Matrix, a: &Matrix) -> Matrix {
    pinv_solve(&a.transpose(), &b.transpose()).transpose()
}
