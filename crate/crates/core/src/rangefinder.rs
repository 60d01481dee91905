//! Orthonormal bases for the dominant range of a matrix.
//!
//! All variants work in the range space: they orthonormalize `B Omega` and,
//! for the powered and Krylov variants, products `(BB')^j B Omega`, so every
//! basis lives in `R^m` and the depth-0 case coincides with the basic
//! rangefinder.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::dense::{hstack, orth, LinearOperator, Matrix, Gram};
use crate::error::{dims, mismatch, Error, Result};
use crate::estimate::power_max_eig;
use crate::sketch::{make_sketch, Scaling, SketchKind};

/// Oversampling used when a caller gives a target rank instead of a sketch size.
pub const DEFAULT_OVERSAMPLE: usize = 10;
/// Power-iteration depth adequate for modest spectral decay.
pub const DEFAULT_POWER: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KrylovBasis {
    Monomial,
    Lanczos,
    Chebyshev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RangeMethod {
    Basic,
    Power { q: usize },
    Krylov { q: usize, basis: KrylovBasis },
    Adaptive { block: usize },
}

#[derive(Debug, Clone)]
pub struct RangeBasis {
    /// `m x r` with orthonormal columns. `r` may fall short of the request when
    /// the sample is numerically rank deficient.
    pub q: Matrix,
    pub method: RangeMethod,
    pub seed: u64,
    /// Adaptive variants: the column budget `min(m, n)` was exhausted first.
    pub max_rank_reached: bool,
    /// Chebyshev basis: a product exceeded the supplied norm bound by more than 1%.
    pub norm_bound_violated: bool,
}

impl RangeBasis {
    fn new(q: Matrix, method: RangeMethod, seed: u64) -> Self {
        Self { q, method, seed, max_rank_reached: false, norm_bound_violated: false }
    }

    pub fn rank(&self) -> usize {
        self.q.ncols()
    }

    /// `Q Q' M`.
    pub fn project(&self, m: &Matrix) -> Matrix {
        &self.q * self.q.tr_mul(m)
    }
}

fn sample<B: LinearOperator + ?Sized>(b: &B, l: usize, kind: SketchKind, seed: u64) -> Result<Matrix> {
    let s = make_sketch(kind, l, b.ncols(), seed, Scaling::UnitVariance)?;
    Ok(match b.as_dense() {
        Some(a) => s.right_adjoint(a)?,
        None => b.apply_mat(&s.test_matrix()),
    })
}

fn check_l<B: LinearOperator + ?Sized>(b: &B, l: usize) -> Result<()> {
    let (m, n) = (b.nrows(), b.ncols());
    if l == 0 || l > m.min(n) {
        return dims(format!("sketch size l={l} must lie in 1..={}", m.min(n)));
    }
    Ok(())
}

/// Basic randomized rangefinder: `Q = orth(B Omega)` with `Omega` drawn from `kind`.
pub fn rangefinder<B: LinearOperator + ?Sized>(b: &B, l: usize, kind: SketchKind, seed: u64) -> Result<RangeBasis> {
    check_l(b, l)?;
    let y = sample(b, l, kind, seed)?;
    Ok(RangeBasis::new(orth(&y), RangeMethod::Basic, seed))
}

/// Powered rangefinder: orthonormalize, then multiply by `BB'`, `q` times.
pub fn power_rangefinder<B: LinearOperator + ?Sized>(b: &B, l: usize, q: usize, seed: u64) -> Result<RangeBasis> {
    check_l(b, l)?;
    let mut y = sample(b, l, SketchKind::Gaussian, seed)?;
    for _ in 0..q {
        let z = orth(&y);
        y = b.apply_mat(&b.apply_adjoint_mat(&z));
    }
    Ok(RangeBasis::new(orth(&y), RangeMethod::Power { q }, seed))
}

/// Block Krylov rangefinder over `{B Omega, (BB') B Omega, ..., (BB')^q B Omega}`.
///
/// For the Chebyshev basis `nu` bounds `||BB'|| = ||B||^2`; when absent it is
/// taken as 1.1 times a 20-step power estimate.
pub fn krylov_rangefinder<B: LinearOperator + ?Sized>(
    b: &B,
    l: usize,
    q: usize,
    basis: KrylovBasis,
    nu: Option<f64>,
    seed: u64,
) -> Result<RangeBasis> {
    check_l(b, l)?;
    if q == 0 {
        return Err(Error::InvalidArgument("Krylov rangefinder needs depth q >= 1".into()));
    }
    let method = RangeMethod::Krylov { q, basis };
    let bbt = |y: &Matrix| b.apply_mat(&b.apply_adjoint_mat(y));
    match basis {
        KrylovBasis::Monomial => {
            let mut blocks = vec![orth(&sample(b, l, SketchKind::Gaussian, seed)?)];
            for i in 1..=q {
                let prev = orth(&blocks[i - 1]);
                blocks.push(bbt(&prev));
            }
            let refs: Vec<&Matrix> = blocks.iter().collect();
            Ok(RangeBasis::new(orth(&hstack(&refs)), method, seed))
        }
        KrylovBasis::Lanczos => {
            let s = make_sketch(SketchKind::Gaussian, l, b.ncols(), seed, Scaling::UnitVariance)?;
            let q0 = orth(&s.test_matrix());
            let (p0, r) = qr_thin(&b.apply_mat(&q0));
            let mut qs = vec![q0];
            let mut ps = vec![p0];
            let mut r_prev = r;
            for i in 1..=q {
                let mut z = b.apply_adjoint_mat(&ps[i - 1]) - &qs[i - 1] * r_prev.transpose();
                double_gram_schmidt(&mut z, &qs);
                let (qi, r_even) = qr_thin(&z);
                let mut w = b.apply_mat(&qi) - &ps[i - 1] * r_even.transpose();
                double_gram_schmidt(&mut w, &ps);
                let (pi, r_odd) = qr_thin(&w);
                qs.push(qi);
                ps.push(pi);
                r_prev = r_odd;
            }
            let refs: Vec<&Matrix> = ps.iter().collect();
            Ok(RangeBasis::new(orth(&hstack(&refs)), method, seed))
        }
        KrylovBasis::Chebyshev => {
            let nu = match nu {
                Some(v) if v > 0.0 => v,
                Some(v) => return Err(Error::InvalidArgument(format!("norm bound must be positive, got {v}"))),
                None => 1.1 * power_max_eig(&Gram(b), 20, 0.0, crate::rng::derive(seed, 0xc4eb))?.xi,
            };
            let mut violated = false;
            let mut apply = |y: &Matrix| {
                let z = bbt(y);
                if z.norm() > 1.01 * nu * y.norm() {
                    violated = true;
                }
                z
            };
            let y0 = orth(&sample(b, l, SketchKind::Gaussian, seed)?);
            let mut blocks = vec![y0.clone()];
            if nu.is_finite() && y0.ncols() > 0 {
                blocks.push(apply(&y0) * (2.0 / nu) - &y0);
                for i in 2..=q {
                    let next = apply(&blocks[i - 1]) * (4.0 / nu) - &blocks[i - 1] * 2.0 - &blocks[i - 2];
                    blocks.push(next);
                }
            }
            let refs: Vec<&Matrix> = blocks.iter().collect();
            let mut out = RangeBasis::new(orth(&hstack(&refs)), method, seed);
            out.norm_bound_violated = violated;
            Ok(out)
        }
    }
}

fn qr_thin(y: &Matrix) -> (Matrix, Matrix) {
    crate::dense::qr_econ(y)
}

fn double_gram_schmidt(z: &mut Matrix, blocks: &[Matrix]) {
    for _ in 0..2 {
        for qj in blocks {
            let c = qj.tr_mul(z);
            *z -= qj * c;
        }
    }
}

/// Frobenius-type posterior estimate `sqrt(||Y||_F^2 / b)` from a `b`-column residual sample.
fn norm_est(y: &Matrix) -> f64 {
    (y.norm_squared() / y.ncols().max(1) as f64).sqrt()
}

/// Incremental rangefinder: add Gaussian blocks of width `b`, each projected
/// against all earlier blocks, until the posterior Frobenius-type estimate
/// of the residual drops to `tau`. The final probe block is kept in the basis.
pub fn adaptive_rangefinder<A: LinearOperator + ?Sized>(a: &A, tau: f64, b: usize, seed: u64) -> Result<RangeBasis> {
    if !(tau > 0.0) || b == 0 {
        return Err(Error::InvalidArgument(format!("need tau > 0 and b >= 1 (tau={tau}, b={b})")));
    }
    let budget = a.nrows().min(a.ncols());
    let draw = |i: u64| {
        let omega = crate::rng::gaussian_matrix(&mut crate::rng::stream(seed, i), a.ncols(), b);
        a.apply_mat(&omega)
    };
    let mut y = draw(0);
    let mut blocks = vec![orth(&y)];
    let mut cols = blocks[0].ncols();
    let mut i = 1u64;
    let mut out_of_budget = false;
    while norm_est(&y) > tau {
        if cols >= budget {
            out_of_budget = true;
            break;
        }
        y = draw(i);
        double_gram_schmidt(&mut y, &blocks);
        let qi = orth(&y);
        cols += qi.ncols();
        blocks.push(qi);
        i += 1;
    }
    let refs: Vec<&Matrix> = blocks.iter().collect();
    let mut out = RangeBasis::new(hstack(&refs), RangeMethod::Adaptive { block: b }, seed);
    out.max_rank_reached = out_of_budget;
    Ok(out)
}

/// Result of the incremental rangefinder with explicit updating.
#[derive(Debug, Clone)]
pub struct QbFactors {
    pub q: Matrix,
    pub b: Matrix,
    pub max_rank_reached: bool,
    /// Per iteration: `(||A_work||_F^2, ||B_acc||_F^2)`.
    pub frobenius_history: Vec<(f64, f64)>,
}

/// Incremental QB factorization with a guaranteed Frobenius residual
/// `||A - QB||_F <= tau` on normal exit. The caller's matrix is not modified.
pub fn adaptive_rangefinder_qb(a: &Matrix, tau: f64, b: usize, seed: u64) -> Result<QbFactors> {
    if !(tau > 0.0) || b == 0 {
        return Err(Error::InvalidArgument(format!("need tau > 0 and b >= 1 (tau={tau}, b={b})")));
    }
    let (m, n) = a.shape();
    let budget = m.min(n);
    let mut work = a.clone();
    let mut qs: Vec<Matrix> = Vec::new();
    let mut bs: Vec<Matrix> = Vec::new();
    let mut b_fro = 0.0;
    let mut history = Vec::new();
    let mut cols = 0;
    let mut i = 0u64;
    let mut out_of_budget = false;
    loop {
        if i > 0 && work.norm() <= tau {
            break;
        }
        if cols >= budget || (i > 0 && qs.last().is_some_and(|q| q.ncols() == 0)) {
            out_of_budget = work.norm() > tau;
            break;
        }
        let omega = crate::rng::gaussian_matrix(&mut crate::rng::stream(seed, i), n, b);
        let mut y = crate::dense::par_matmul(&work, &omega);
        double_gram_schmidt(&mut y, &qs);
        let qi = orth(&y);
        let bi = crate::dense::par_tr_matmul(&qi, &work);
        work -= crate::dense::par_matmul(&qi, &bi);
        b_fro += bi.norm_squared();
        cols += qi.ncols();
        history.push((work.norm_squared(), b_fro));
        qs.push(qi);
        bs.push(bi);
        i += 1;
    }
    let qrefs: Vec<&Matrix> = qs.iter().collect();
    let q = if qs.is_empty() { Matrix::zeros(m, 0) } else { hstack(&qrefs) };
    let bt: Vec<Matrix> = bs.iter().map(|x| x.transpose()).collect();
    let brefs: Vec<&Matrix> = bt.iter().collect();
    let bmat = if bs.is_empty() { Matrix::zeros(0, n) } else { hstack(&brefs).transpose() };
    Ok(QbFactors { q, b: bmat, max_rank_reached: out_of_budget, frobenius_history: history })
}

/// Squared-error Schur complement `B'(I - P_{BX})B` of the rangefinder with test matrix `X`.
pub fn schur_error_sq(b: &Matrix, x: &Matrix) -> Result<Matrix> {
    if x.nrows() != b.ncols() {
        return mismatch(format!("test matrix has {} rows, B has {} columns", x.nrows(), b.ncols()));
    }
    let p = orth(&(b * x));
    let resid = b - &p * p.tr_mul(b);
    let e = resid.tr_mul(&resid);
    Ok((&e + e.transpose()) * 0.5)
}

/// Expected-error bound for the Gaussian rangefinder with sketch size `l` and
/// comparison rank `k` (needs `l >= k + 2`):
/// `(1 + sqrt(k/(l-k-1))) sigma_{k+1} + (e sqrt(l)/(l-k)) (sum_{j>k} sigma_j^2)^{1/2}`.
pub fn gaussian_error_bound(sigma: &[f64], k: usize, l: usize) -> f64 {
    assert!(l >= k + 2, "bound needs l >= k + 2");
    let tail: f64 = sigma.iter().skip(k).map(|s| s * s).sum();
    let head = sigma.get(k).copied().unwrap_or(0.0);
    (1.0 + (k as f64 / (l - k - 1) as f64).sqrt()) * head + E * (l as f64).sqrt() / (l - k) as f64 * tail.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{orthonormality_defect, pinv_solve, spectral_norm, with_spectrum};
    use crate::rng;

    fn err(b: &Matrix, q: &Matrix) -> f64 {
        spectral_norm(&(b - q * q.tr_mul(b)))
    }

    fn low_rank(seed: u64, m: usize, n: usize, r: usize) -> Matrix {
        rng::gaussian_matrix(&mut rng::stream(seed, 0), m, r) * rng::gaussian_matrix(&mut rng::stream(seed, 1), r, n)
    }

    fn projector(q: &Matrix) -> Matrix {
        q * q.transpose()
    }

    #[test]
    fn exact_rank_is_captured() {
        let b = low_rank(1, 30, 20, 3);
        let nb = spectral_norm(&b);
        for kind in [SketchKind::Gaussian, SketchKind::sparse_default(5), SketchKind::srtt()] {
            let q = rangefinder(&b, 5, kind, 2).unwrap();
            assert!(err(&b, &q.q) <= 1e-10 * nb);
            assert_eq!(q.rank(), 3);
            assert!(orthonormality_defect(&q.q) < 1e-10);
        }
        for qd in 0..3 {
            assert!(err(&b, &power_rangefinder(&b, 4, qd, 3).unwrap().q) <= 1e-10 * nb);
        }
    }

    #[test]
    fn zero_matrix_gives_empty_basis() {
        let z = Matrix::zeros(6, 5);
        let q = rangefinder(&z, 3, SketchKind::Gaussian, 1).unwrap();
        assert_eq!((q.q.nrows(), q.rank()), (6, 0));
        assert_eq!(err(&z, &q.q), 0.0);
        assert!(matches!(rangefinder(&z, 6, SketchKind::Gaussian, 1), Err(Error::InvalidDims(_))));
    }

    #[test]
    fn power_iteration_contracts_toward_top_direction() {
        let mut b = Matrix::zeros(10, 10);
        b[(0, 0)] = 1.0;
        b[(1, 1)] = 0.9;
        let tan_angle = |q: &Matrix| (1.0 - q[(0, 0)] * q[(0, 0)]).max(0.0).sqrt() / q[(0, 0)].abs();
        for s in 0..20u64 {
            // Omega column entries come from per-row streams of the Gaussian sketch
            let g1 = rng::gaussian_vector(&mut rng::stream(s, 0), 1)[0];
            let g2 = rng::gaussian_vector(&mut rng::stream(s, 1), 1)[0];
            let q = power_rangefinder(&b, 1, 20, s).unwrap().q;
            let want = 0.9f64.powi(41) * (g2 / g1).abs();
            assert!((tan_angle(&q) - want).abs() <= 1e-6 * want, "seed {s}");
        }
        // depth at which the 1e-3 angle holds for 95% of starts
        let good = (0..100u64).filter(|&s| tan_angle(&power_rangefinder(&b, 1, 60, s).unwrap().q) <= 1e-3).count();
        assert!(good >= 95, "{good}");
        assert_eq!(DEFAULT_POWER, 2);
    }

    #[test]
    fn power_error_is_monotone_in_depth() {
        let sigma: Vec<f64> = (0..30).map(|j| 0.8f64.powi(j)).collect();
        let b = with_spectrum(&mut rng::stream(5, 0), 40, 30, &sigma);
        for seed in 0..10 {
            let errs: Vec<f64> = (0..5).map(|q| err(&b, &power_rangefinder(&b, 6, q, seed).unwrap().q)).collect();
            for w in errs.windows(2) {
                assert!(w[1] <= w[0] + 1e-10, "{errs:?}");
            }
        }
    }

    #[test]
    fn krylov_contains_basic_and_power_subspaces() {
        let sigma: Vec<f64> = (0..25).map(|j| 1.0 / (1.0 + j as f64)).collect();
        let b = with_spectrum(&mut rng::stream(6, 0), 30, 25, &sigma);
        for basis in [KrylovBasis::Monomial, KrylovBasis::Lanczos, KrylovBasis::Chebyshev] {
            let k = krylov_rangefinder(&b, 3, 2, basis, None, 7).unwrap();
            let pk = projector(&k.q);
            let basic = rangefinder(&b, 3, SketchKind::Gaussian, 7).unwrap().q;
            assert!(spectral_norm(&(&basic - &pk * &basic)) <= 1e-8, "{basis:?}");
            let pw = power_rangefinder(&b, 3, 2, 7).unwrap().q;
            assert!(spectral_norm(&(&pw - &pk * &pw)) <= 1e-8, "{basis:?}");
            assert_eq!(k.rank(), 9);
            assert!(!k.norm_bound_violated);
        }
    }

    #[test]
    fn lanczos_krylov_spans_everything_on_small_diagonal() {
        let b = Matrix::from_diagonal(&crate::dense::Vector::from_fn(6, |i, _| (i + 1) as f64));
        let k = krylov_rangefinder(&b, 1, 5, KrylovBasis::Lanczos, None, 3).unwrap();
        assert_eq!(k.rank(), 6);
        assert!(err(&b, &k.q) <= 1e-9);
    }

    #[test]
    fn krylov_bases_agree() {
        let b = rng::gaussian_matrix(&mut rng::stream(8, 0), 50, 50);
        let ps: Vec<Matrix> = [KrylovBasis::Monomial, KrylovBasis::Lanczos, KrylovBasis::Chebyshev]
            .iter()
            .map(|&basis| projector(&krylov_rangefinder(&b, 4, 3, basis, None, 9).unwrap().q))
            .collect();
        assert!(spectral_norm(&(&ps[0] - &ps[1])) <= 1e-6);
        assert!(spectral_norm(&(&ps[0] - &ps[2])) <= 1e-6);
    }

    #[test]
    fn chebyshev_flags_a_bad_norm_bound() {
        let b = rng::gaussian_matrix(&mut rng::stream(10, 0), 20, 20);
        let k = krylov_rangefinder(&b, 2, 2, KrylovBasis::Chebyshev, Some(1e-3), 1).unwrap();
        assert!(k.norm_bound_violated);
    }

    #[test]
    fn adaptive_saturates_at_rank() {
        let a = low_rank(11, 40, 30, 4);
        let na = spectral_norm(&a);
        for seed in 0..5 {
            let q = adaptive_rangefinder(&a, 1e-8 * na, 2, seed).unwrap();
            assert!(q.rank() == 4 || q.rank() == 6, "{}", q.rank());
            assert!(err(&a, &q.q) <= 1e-10 * na);
            assert!(orthonormality_defect(&q.q) < 1e-10);
        }
        let one = adaptive_rangefinder(&a, 1e6 * na, 2, 0).unwrap();
        assert_eq!(one.rank(), 2);
    }

    #[test]
    fn adaptive_flags_exhausted_budget() {
        let a = rng::gaussian_matrix(&mut rng::stream(12, 0), 8, 6);
        let q = adaptive_rangefinder(&a, 1e-14, 4, 1).unwrap();
        assert!(q.max_rank_reached);
        assert!(q.rank() <= 8);
    }

    #[test]
    fn adaptive_qb_examples() {
        let a = low_rank(13, 20, 15, 2);
        let f = adaptive_rangefinder_qb(&a, 1e-9, 1, 2).unwrap();
        assert!(f.frobenius_history.len() <= 3);
        assert!((&a - &f.q * &f.b).norm() <= 1e-9);
        let z = adaptive_rangefinder_qb(&Matrix::zeros(5, 4), 1e-9, 2, 1).unwrap();
        assert_eq!((z.q.ncols(), z.b.nrows()), (0, 0));
        assert!(!z.max_rank_reached);
        let g = rng::gaussian_matrix(&mut rng::stream(14, 0), 25, 18);
        let f = adaptive_rangefinder_qb(&g, 0.5, 3, 4).unwrap();
        let total = g.norm_squared();
        for &(w, b) in &f.frobenius_history {
            assert!((w + b - total).abs() <= 1e-9 * total);
        }
        assert!((&g - &f.q * &f.b).norm() <= 0.5);
    }

    #[test]
    fn schur_complement_examples() {
        let b = rng::gaussian_matrix(&mut rng::stream(15, 0), 5, 5);
        assert!(schur_error_sq(&b, &Matrix::identity(5, 5)).unwrap().amax() < 1e-10);
        let z = schur_error_sq(&b, &Matrix::zeros(5, 2)).unwrap();
        assert!((z - b.tr_mul(&b)).amax() < 1e-12);
        let x = rng::gaussian_matrix(&mut rng::stream(16, 0), 5, 2);
        let a = b.tr_mul(&b);
        let ax = &a * &x;
        let core = pinv_solve(&x.tr_mul(&ax), &ax.transpose());
        let direct = &a - &ax * core;
        assert!((schur_error_sq(&b, &x).unwrap() - direct).amax() <= 1e-10 * a.amax());
    }

    #[test]
    fn error_equals_top_eigenvalue_of_schur_complement() {
        for seed in 0..10u64 {
            let b = rng::gaussian_matrix(&mut rng::stream(seed, 7), 12, 9);
            let x = rng::gaussian_matrix(&mut rng::stream(seed, 8), 9, 3);
            let q = orth(&(&b * &x));
            let e = err(&b, &q);
            let (vals, _) = crate::dense::eig_sym(&schur_error_sq(&b, &x).unwrap());
            assert!((e * e - vals[vals.len() - 1]).abs() <= 1e-9 * e * e);
        }
    }

    #[test]
    fn error_grows_with_tail_singular_value() {
        let mut r = rng::stream(17, 0);
        let v = crate::dense::qr_econ(&rng::gaussian_matrix(&mut r, 3, 3)).0;
        let x = rng::gaussian_matrix(&mut r, 3, 1);
        let grid = [0.1, 0.3, 0.5, 0.7, 0.9];
        for &s2 in &grid {
            let mut last = -1.0;
            for &s3 in grid.iter().filter(|&&t| t <= s2) {
                let b = Matrix::from_diagonal(&crate::dense::Vector::from_vec(vec![1.0, s2, s3])) * v.transpose();
                let (vals, _) = crate::dense::eig_sym(&schur_error_sq(&b, &x).unwrap());
                let top = vals[2];
                assert!(top >= last - 1e-12);
                last = top;
            }
        }
    }

    #[test]
    fn bound_formula_example() {
        let mut sigma = vec![1.0; 10];
        sigma.extend(std::iter::repeat_n(0.01, 90));
        let bound = gaussian_error_bound(&sigma, 10, 15);
        let want = (1.0 + (10.0f64 / 4.0).sqrt()) * 0.01 + E * 15f64.sqrt() / 5.0 * (90.0f64 * 1e-4).sqrt();
        assert!((bound - want).abs() < 1e-15);
        assert!((bound - 0.225_563_5).abs() < 1e-7, "{bound}");
    }
}
