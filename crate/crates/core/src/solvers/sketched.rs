//! Sketch-and-solve, iterative sketching and sketch-and-precondition.

use super::{krylov::lsqr_from, LsSolution, SolveMethod, DEFAULT_MAX_ITER};
use crate::dense::{hstack, pinv_solve, qr_econ, Matrix, Vector};
use crate::error::{dims, mismatch, Error, Result};
use crate::rng;
use crate::sketch::{make_sketch, Scaling, SketchKind};

/// Pivots below this fraction of the largest `|R_ii|` make a sketched
/// triangular factor unusable.
const SINGULAR_TOL: f64 = 1e-12;

fn check_ls(a: &Matrix, b: &Vector, d: usize) -> Result<()> {
    let (m, n) = a.shape();
    if b.len() != m {
        return mismatch(format!("matrix has {m} rows, right-hand side has {}", b.len()));
    }
    if d < n + 1 || d > m {
        return dims(format!("sketch size d={d} must lie in {}..={m}", n + 1));
    }
    Ok(())
}

fn nonsingular(r: &Matrix) -> bool {
    let diag: Vec<f64> = (0..r.ncols()).map(|i| r[(i, i)].abs()).collect();
    let top = diag.iter().cloned().fold(0.0, f64::max);
    top > 0.0 && diag.iter().all(|&v| v > SINGULAR_TOL * top)
}

/// Solve the compressed problem `min ||S (A x - b)||` by QR. `[A b]` is
/// sketched with one operator.
pub fn sketch_solve_ls(a: &Matrix, b: &Vector, d: usize, kind: SketchKind, seed: u64) -> Result<LsSolution> {
    check_ls(a, b, d)?;
    let n = a.ncols();
    let s = make_sketch(kind, d, a.nrows(), seed, Scaling::Isotropic)?;
    let bordered = s.left(&hstack(&[a, &Matrix::from_column_slice(b.len(), 1, b.as_slice())]))?;
    let sa = bordered.columns(0, n).into_owned();
    let sb = bordered.columns(n, 1).into_owned();
    let x = pinv_solve(&sa, &sb).column(0).into_owned();
    Ok(LsSolution::new(a, b, x, 1, SolveMethod::SketchSolve, true))
}

/// Upper-triangular `R` from the QR factorization of `S A`.
pub fn sketched_r(a: &Matrix, d: usize, kind: SketchKind, seed: u64) -> Result<Matrix> {
    let s = make_sketch(kind, d, a.nrows(), seed, Scaling::Isotropic)?;
    let (_, r) = qr_econ(&s.left(a)?);
    if !nonsingular(&r) {
        return Err(Error::SingularSketch);
    }
    Ok(r)
}

/// Iterative sketching: `x_t = x_{t-1} + ((S_t A)'(S_t A))^{-1} A'(b - A x_{t-1})`
/// with a fresh sketch each step, the inverse applied through the QR of `S_t A`.
pub fn iterative_sketch_ls(
    a: &Matrix,
    b: &Vector,
    d: usize,
    n_iter: usize,
    kind: SketchKind,
    seed: u64,
) -> Result<LsSolution> {
    iterative_sketch_ls_from(a, b, &Vector::zeros(a.ncols()), d, n_iter, kind, seed)
}

/// Iterative sketching started from `x0`.
pub fn iterative_sketch_ls_from(
    a: &Matrix,
    b: &Vector,
    x0: &Vector,
    d: usize,
    n_iter: usize,
    kind: SketchKind,
    seed: u64,
) -> Result<LsSolution> {
    check_ls(a, b, d)?;
    if x0.len() != a.ncols() {
        return mismatch("initial guess has the wrong length");
    }
    if n_iter == 0 {
        return Err(Error::InvalidArgument("iterative sketching needs at least one iteration".into()));
    }
    let mut x = x0.clone();
    for t in 0..n_iter {
        let r = sketched_r(a, d, kind.clone(), rng::derive(seed, 2 * t as u64))
            .or_else(|_| sketched_r(a, d, kind.clone(), rng::derive(seed, 2 * t as u64 + 1)))?;
        let g = a.tr_mul(&(b - a * &x));
        let h = r.tr_solve_upper_triangular(&g).expect("nonsingular R");
        x += r.solve_upper_triangular(&h).expect("nonsingular R");
    }
    Ok(LsSolution::new(a, b, x, n_iter, SolveMethod::IterativeSketch, true))
}

/// Sketch-and-precondition with a Gaussian embedding.
pub fn sketch_precondition_ls(a: &Matrix, b: &Vector, d: usize, tol: f64, seed: u64) -> Result<LsSolution> {
    sketch_precondition_ls_with(a, b, d, tol, SketchKind::Gaussian, DEFAULT_MAX_ITER, seed)
}

/// LSQR on `A R^{-1}` where `S A = Q R`, warm-started from the sketch-and-solve
/// solution `R^{-1} Q' S b` of the same sketch.
pub fn sketch_precondition_ls_with(
    a: &Matrix,
    b: &Vector,
    d: usize,
    tol: f64,
    kind: SketchKind,
    max_iter: usize,
    seed: u64,
) -> Result<LsSolution> {
    check_ls(a, b, d)?;
    let n = a.ncols();
    let s = make_sketch(kind, d, a.nrows(), seed, Scaling::Isotropic)?;
    let bordered = s.left(&hstack(&[a, &Matrix::from_column_slice(b.len(), 1, b.as_slice())]))?;
    let (q, r) = qr_econ(&bordered.columns(0, n).into_owned());
    if !nonsingular(&r) {
        return Err(Error::SingularSketch);
    }
    let x0 = r.solve_upper_triangular(&q.tr_mul(&bordered.column(n))).expect("nonsingular R");
    let mut sol = lsqr_from(a, b, Some(&x0), Some(&r), tol, max_iter)?;
    sol.method = SolveMethod::SketchPrecondition;
    Ok(sol)
}
