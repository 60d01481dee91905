//! LSQR, conjugate gradients and the Nystrom deflation preconditioner.

use super::{LsSolution, SolveMethod};
use crate::dense::{LinearOperator, Matrix, Vector};
use crate::error::{dims, mismatch, Error, Result};
use crate::lowrank::nystrom;

#[derive(Debug, Clone)]
pub enum Preconditioner {
    /// Right preconditioner `R^{-1}` for least squares, `R` upper triangular.
    TriangularR(Matrix),
    /// `M = (1/alpha) U D U' + (I - U U')`, applied through
    /// `M^{-1} = alpha U D^{-1} U' + (I - U U')`.
    NystromDeflation { u: Matrix, d: Vec<f64>, alpha: f64 },
}

impl Preconditioner {
    /// `M^{-1} v` for the deflation preconditioner, `R^{-1} v` for the triangular one.
    pub fn apply_inverse(&self, v: &Vector) -> Vector {
        match self {
            Self::TriangularR(r) => r.solve_upper_triangular(v).expect("nonsingular R"),
            Self::NystromDeflation { u, d, alpha } => {
                let c = u.tr_mul(v);
                let scaled = Vector::from_iterator(c.len(), c.iter().zip(d).map(|(ci, di)| alpha * ci / di));
                v - u * &c + u * scaled
            }
        }
    }
}

fn check_rhs<A: LinearOperator + ?Sized>(a: &A, b: &Vector) -> Result<()> {
    if a.nrows() != b.len() {
        return mismatch(format!("operator has {} rows, right-hand side has {}", a.nrows(), b.len()));
    }
    Ok(())
}

/// LSQR for `min ||A x - b||`, optionally right-preconditioned by `R`.
///
/// Stops when `||A'r|| <= tol (||A|| ||r|| + ||A'b||)`, with all quantities
/// taken for the preconditioned operator `A R^{-1}` and `||A||` the running
/// Frobenius estimate from the bidiagonalization.
pub fn lsqr<A: LinearOperator + ?Sized>(
    a: &A,
    b: &Vector,
    precond: Option<&Matrix>,
    tol: f64,
    max_iter: usize,
) -> Result<LsSolution> {
    lsqr_from(a, b, None, precond, tol, max_iter)
}

/// LSQR started from `x0`.
pub fn lsqr_from<A: LinearOperator + ?Sized>(
    a: &A,
    b: &Vector,
    x0: Option<&Vector>,
    precond: Option<&Matrix>,
    tol: f64,
    max_iter: usize,
) -> Result<LsSolution> {
    check_rhs(a, b)?;
    let n = a.ncols();
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if let Some(r) = precond {
        if r.shape() != (n, n) {
            return dims(format!("preconditioner is {:?}, expected {n}x{n}", r.shape()));
        }
        if (0..n).any(|i| r[(i, i)] == 0.0) {
            return Err(Error::SingularSketch);
        }
    }
    let x0 = match x0 {
        Some(x) if x.len() != n => return mismatch("initial guess has the wrong length"),
        Some(x) => x.clone(),
        None => Vector::zeros(n),
    };
    let fwd = |v: &Vector| match precond {
        Some(r) => a.apply(&r.solve_upper_triangular(v).expect("nonzero diagonal")),
        None => a.apply(v),
    };
    let adj = |u: &Vector| match precond {
        Some(r) => r.tr_solve_upper_triangular(&a.apply_adjoint(u)).expect("nonzero diagonal"),
        None => a.apply_adjoint(u),
    };

    let mut u = b - a.apply(&x0);
    let mut beta = u.norm();
    let finish = |y: Vector, it: usize, ok: bool| {
        let dx = match precond {
            Some(r) => r.solve_upper_triangular(&y).expect("nonzero diagonal"),
            None => y,
        };
        LsSolution::new(a, b, &x0 + dx, it, SolveMethod::Lsqr, ok)
    };
    if beta == 0.0 {
        return Ok(finish(Vector::zeros(n), 0, true));
    }
    u /= beta;
    let mut v = adj(&u);
    let mut alpha = v.norm();
    if alpha == 0.0 {
        return Ok(finish(Vector::zeros(n), 0, true));
    }
    v /= alpha;
    let atb = alpha * beta;
    let mut w = v.clone();
    let mut y = Vector::zeros(n);
    let (mut phibar, mut rhobar) = (beta, alpha);
    let mut anorm_sq = 0.0;
    for it in 1..=max_iter {
        u = fwd(&v) - &u * alpha;
        beta = u.norm();
        if beta > 0.0 {
            u /= beta;
        }
        anorm_sq += alpha * alpha + beta * beta;
        v = adj(&u) - &v * beta;
        alpha = v.norm();
        if alpha > 0.0 {
            v /= alpha;
        }
        let rho = rhobar.hypot(beta);
        let (c, s) = (rhobar / rho, beta / rho);
        let theta = s * alpha;
        rhobar = -c * alpha;
        let phi = c * phibar;
        phibar *= s;
        y.axpy(phi / rho, &w, 1.0);
        w = &v - &w * (theta / rho);
        let arnorm = phibar * alpha * c.abs();
        if arnorm <= tol * (anorm_sq.sqrt() * phibar + atb) {
            return Ok(finish(y, it, true));
        }
    }
    Ok(finish(y, max_iter, false))
}

/// Conjugate gradients for symmetric positive-definite `A`, stopping at
/// `||A x - b|| <= tol ||b||` (on the recursively updated residual).
pub fn cg<A: LinearOperator + ?Sized>(a: &A, b: &Vector, tol: f64, max_iter: usize) -> Result<LsSolution> {
    pcg(a, b, |r: &Vector| r.clone(), tol, max_iter, SolveMethod::Cg)
}

/// Preconditioned conjugate gradients with `minv(r) = M^{-1} r`.
pub fn pcg<A, F>(a: &A, b: &Vector, minv: F, tol: f64, max_iter: usize, method: SolveMethod) -> Result<LsSolution>
where
    A: LinearOperator + ?Sized,
    F: Fn(&Vector) -> Vector,
{
    check_rhs(a, b)?;
    if a.ncols() != a.nrows() {
        return dims("conjugate gradients needs a square operator");
    }
    let n = a.ncols();
    let mut x = Vector::zeros(n);
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return Ok(LsSolution::new(a, b, x, 0, method, true));
    }
    let mut r = b.clone();
    let mut z = minv(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for it in 1..=max_iter {
        let ap = a.apply(&p);
        let pap = p.dot(&ap);
        if !(pap > 0.0) {
            return Err(Error::NotPd(format!("p'Ap = {pap:e} at iteration {it}")));
        }
        let step = rz / pap;
        x.axpy(step, &p, 1.0);
        r.axpy(-step, &ap, 1.0);
        if r.norm() <= tol * bnorm {
            return Ok(LsSolution::new(a, b, x, it, method, true));
        }
        z = minv(&r);
        let rz_new = r.dot(&z);
        p = &z + &p * (rz_new / rz);
        rz = rz_new;
    }
    Ok(LsSolution::new(a, b, x, max_iter, method, false))
}

/// Deflation preconditioner from a rank-`k` Nystrom approximation with `l`
/// samples, `alpha = lambda_k`.
pub fn nystrom_preconditioner<A: LinearOperator + ?Sized>(a: &A, k: usize, l: usize, seed: u64) -> Result<Preconditioner> {
    let f = nystrom(a, k, l, seed).map_err(|e| match e {
        Error::NotPsd(msg) => Error::NotPd(msg),
        other => other,
    })?;
    let alpha = f.lambda.last().copied().unwrap_or(0.0);
    if !(alpha > 0.0) || f.lambda.len() < k {
        return Err(Error::NotPd(format!("Nystrom eigenvalue lambda_k = {alpha:e} is not positive")));
    }
    Ok(Preconditioner::NystromDeflation { u: f.u, d: f.lambda, alpha })
}

/// PCG with the Nystrom deflation preconditioner.
pub fn nystrom_pcg<A: LinearOperator + ?Sized>(
    a: &A,
    b: &Vector,
    k: usize,
    l: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<LsSolution> {
    check_rhs(a, b)?;
    let m = nystrom_preconditioner(a, k, l, seed)?;
    pcg(a, b, |r: &Vector| m.apply_inverse(r), tol, max_iter, SolveMethod::NystromPcg)
}
