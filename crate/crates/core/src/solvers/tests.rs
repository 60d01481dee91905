use super::*;
use crate::dense::{eig_sym, from_svd, qr_econ, spectral_norm, svd_econ, with_spectrum, Matrix, Vector};
use crate::rng;
use crate::sketch::SketchKind;

fn ls_oracle(a: &Matrix, b: &Vector) -> Vector {
    let (q, r) = qr_econ(a);
    r.solve_upper_triangular(&q.tr_mul(b)).unwrap()
}

fn conditioned(seed: u64, m: usize, n: usize, kappa: f64) -> Matrix {
    let sigma: Vec<f64> = (0..n).map(|j| kappa.powf(-(j as f64) / (n - 1) as f64)).collect();
    with_spectrum(&mut rng::stream(seed, 0), m, n, &sigma)
}

fn residual_matches(a: &Matrix, b: &Vector, s: &LsSolution) {
    let r = (a * s.x_vector() - b).norm();
    assert!((r - s.residual_norm).abs() <= 1e-10 * r.max(1e-300));
}

#[test]
fn lsqr_examples() {
    let mut g = rng::stream(1, 0);
    let b = rng::gaussian_vector(&mut g, 12);
    let s = lsqr(&Matrix::identity(12, 12), &b, None, 1e-12, 10).unwrap();
    assert_eq!(s.iterations, 1);
    assert!((s.x_vector() - &b).amax() < 1e-14);

    let a = conditioned(2, 60, 15, 10.0);
    let b = &a * rng::gaussian_vector(&mut g, 15);
    let s = lsqr(&a, &b, None, 1e-14, 45).unwrap();
    assert!(s.residual_norm <= 1e-10 * b.norm(), "{}", s.residual_norm);
    residual_matches(&a, &b, &s);

    let a = rng::gaussian_matrix(&mut g, 50, 10);
    let b = rng::gaussian_vector(&mut g, 50);
    let s = lsqr(&a, &b, None, 1e-14, 100).unwrap();
    assert!((s.x_vector() - ls_oracle(&a, &b)).amax() < 1e-8);
    assert!(s.converged);
}

#[test]
fn lsqr_flags_exhausted_budget() {
    let a = conditioned(3, 80, 30, 1e6);
    let b = rng::gaussian_vector(&mut rng::stream(3, 1), 80);
    let s = lsqr(&a, &b, None, 1e-14, 3).unwrap();
    assert!(!s.converged && s.iterations == 3);
}

#[test]
fn sketch_solve_examples() {
    let mut g = rng::stream(4, 0);
    let a = rng::gaussian_matrix(&mut g, 300, 8);
    let b = &a * rng::gaussian_vector(&mut g, 8);
    for kind in [SketchKind::Gaussian, SketchKind::sparse_default(20), SketchKind::srtt()] {
        let s = sketch_solve_ls(&a, &b, 20, kind, 5).unwrap();
        assert!(s.residual_norm <= 1e-9 * b.norm());
    }
    let b = rng::gaussian_vector(&mut g, 300);
    let s = sketch_solve_ls(&a, &b, 300, SketchKind::PartialIsometry, 1).unwrap();
    assert!((s.x_vector() - ls_oracle(&a, &b)).amax() < 1e-10);
    assert!(matches!(sketch_solve_ls(&a, &b, 8, SketchKind::Gaussian, 0), Err(crate::Error::InvalidDims(_))));
}

#[test]
fn sketch_solve_is_near_optimal() {
    let (m, n) = (4000, 20);
    let eps: f64 = 0.5;
    let d = ((n as f64) * (n as f64).ln() / (eps * eps)).ceil() as usize;
    let mut ok = 0;
    for seed in 0..100 {
        let mut g = rng::stream(seed, 9);
        let a = rng::gaussian_matrix(&mut g, m, n);
        let b = rng::gaussian_vector(&mut g, m);
        let opt = (&a * ls_oracle(&a, &b) - &b).norm();
        let s = sketch_solve_ls(&a, &b, d, SketchKind::sparse_default(d), seed).unwrap();
        if s.residual_norm <= 1.5 * opt {
            ok += 1;
        }
    }
    assert!(ok >= 95, "{ok}/100 with d={d}");
}

#[test]
fn iterative_sketch_examples() {
    let mut g = rng::stream(5, 0);
    let a = rng::gaussian_matrix(&mut g, 200, 10);
    let b = rng::gaussian_vector(&mut g, 200);
    let s = iterative_sketch_ls(&a, &b, 200, 1, SketchKind::PartialIsometry, 3).unwrap();
    assert!((s.x_vector() - ls_oracle(&a, &b)).amax() < 1e-10);

    let mut ok = 0;
    for seed in 0..100 {
        let mut g = rng::stream(seed, 6);
        let a = rng::gaussian_matrix(&mut g, 2000, 20);
        let b = rng::gaussian_vector(&mut g, 2000);
        let opt = (&a * ls_oracle(&a, &b) - &b).norm();
        let s = iterative_sketch_ls(&a, &b, 120, 20, SketchKind::Gaussian, seed).unwrap();
        if s.residual_norm <= (1.0 + 1e-6) * opt {
            ok += 1;
        }
    }
    assert!(ok >= 90, "{ok}/100");
}

#[test]
fn iterative_sketch_fixed_point() {
    let mut g = rng::stream(6, 0);
    let a = rng::gaussian_matrix(&mut g, 100, 5);
    let xstar = rng::gaussian_vector(&mut g, 5);
    let b = &a * &xstar + rng::gaussian_vector(&mut g, 100);
    let opt = ls_oracle(&a, &b);
    let s = iterative_sketch_ls_from(&a, &b, &opt, 30, 3, SketchKind::Gaussian, 1).unwrap();
    assert!((s.x_vector() - &opt).amax() < 1e-12 * opt.amax());
}

#[test]
fn sketch_preconditioner_is_well_conditioned() {
    let (m, n) = (600, 30);
    let mut ok = 0;
    for seed in 0..100 {
        let a = conditioned(seed, m, n, 1e6);
        let r = sketched_r(&a, 4 * n, SketchKind::Gaussian, seed).unwrap();
        let ar = r.tr_solve_upper_triangular(&a.transpose()).unwrap().transpose();
        let s = svd_econ(&ar).s;
        if s[0] / s[n - 1] <= 4.0 {
            ok += 1;
        }
    }
    assert!(ok >= 99, "{ok}/100");
}

#[test]
fn sketch_precondition_converges_fast_on_ill_conditioned_systems() {
    let (m, n) = (1000, 25);
    for seed in 0..5 {
        let a = conditioned(seed + 40, m, n, 1e8);
        let mut g = rng::stream(seed, 41);
        let b = &a * rng::gaussian_vector(&mut g, n);
        let s = sketch_precondition_ls(&a, &b, 4 * n, 1e-12, seed).unwrap();
        assert!(s.iterations <= 30, "{}", s.iterations);
        assert!(s.residual_norm <= 1e-9 * b.norm());
        residual_matches(&a, &b, &s);

        let b = rng::gaussian_vector(&mut g, m);
        let s = sketch_precondition_ls(&a, &b, 4 * n, 1e-10, seed).unwrap();
        assert!(s.converged && s.iterations <= 60);
        let it = iterative_sketch_ls(&a, &b, 4 * n, 40, SketchKind::Gaussian, seed).unwrap();
        let opt = ls_oracle(&a, &b);
        let resid_opt = (&a * &opt - &b).norm();
        assert!(s.residual_norm <= resid_opt * (1.0 + 1e-10));
        assert!(it.residual_norm <= resid_opt * (1.0 + 1e-6));
    }
}

#[test]
fn kaczmarz_single_equation_lands_on_hyperplane() {
    let a = Matrix::from_row_slice(1, 3, &[1.0, -2.0, 0.5]);
    let b = Vector::from_vec(vec![4.0]);
    let s = randomized_kaczmarz(&a, &b, 1, KaczmarzMode::Rows, 0).unwrap();
    assert!(s.residual_norm < 1e-12);
}

#[test]
fn kaczmarz_samples_by_squared_row_norm() {
    let a = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
    let b = Vector::from_vec(vec![1.0, 1.0]);
    let mut second = 0usize;
    randomized_kaczmarz_observed(&a, &b, 100_000, KaczmarzMode::Rows, 3, |st| {
        if st.row == Some(1) {
            second += 1;
        }
    })
    .unwrap();
    let f = second as f64 / 1e5;
    assert!((f - 0.8).abs() < 0.01, "{f}");
}

#[test]
fn kaczmarz_matches_convergence_rate() {
    let (m, n) = (200, 20);
    let mut g = rng::stream(8, 0);
    let a = rng::gaussian_matrix(&mut g, m, n);
    let xstar = rng::gaussian_vector(&mut g, n);
    let b = &a * &xstar;
    let s = svd_econ(&a).s;
    let rate = s[n - 1].powi(2) / a.norm_squared();
    let half = (std::f64::consts::LN_2 / rate).ceil() as usize;
    let steps = (1.3 * half as f64).ceil() as usize;
    let mut mean = 0.0;
    for seed in 0..100 {
        let mut prev = xstar.norm();
        randomized_kaczmarz_observed(&a, &b, steps, KaczmarzMode::Rows, seed, |st| {
            let e = (st.x - &xstar).norm();
            assert!(e <= prev + 1e-12);
            prev = e;
            if st.t == steps {
                mean += e * e / 100.0;
            }
        })
        .unwrap();
    }
    assert!(mean <= 0.5 * xstar.norm_squared(), "{mean} vs {}", xstar.norm_squared());
}

#[test]
fn block_kaczmarz_reaches_least_squares_solution() {
    let mut g = rng::stream(9, 0);
    let a = rng::gaussian_matrix(&mut g, 60, 8);
    let b = rng::gaussian_vector(&mut g, 60);
    let b = &a * rng::gaussian_vector(&mut g, 8) + b * 0.0;
    // A full-height sketch sees every equation: one projection solves it.
    let s = randomized_kaczmarz(&a, &b, 1, KaczmarzMode::Block(60), 1).unwrap();
    assert!(s.residual_norm < 1e-10 * b.norm());
    let s = randomized_kaczmarz(&a, &b, 200, KaczmarzMode::Block(4), 2).unwrap();
    assert!(s.residual_norm < 1e-8 * b.norm());
    assert!(matches!(
        randomized_kaczmarz(&Matrix::zeros(3, 2), &Vector::zeros(3), 5, KaczmarzMode::Rows, 0),
        Err(crate::Error::ZeroMatrix)
    ));
}

#[test]
fn pcg_on_identity_takes_one_step() {
    let b = rng::gaussian_vector(&mut rng::stream(1, 1), 20);
    let s = nystrom_pcg(&Matrix::identity(20, 20), &b, 3, 8, 1e-10, 10, 0).unwrap();
    assert_eq!(s.iterations, 1);
    assert!(s.residual_norm < 1e-12);
}

/// Five eigenvalues at 100 over a bulk in [0.1, 1]; also returns the same
/// matrix with the spikes moved to the top of the bulk.
fn spiked(seed: u64, n: usize) -> (Matrix, Matrix) {
    let mut g = rng::stream(seed, 77);
    let bulk: Vec<f64> = (0..n).map(|_| 0.1 + 0.9 * rand::Rng::random::<f64>(&mut g)).collect();
    let u = qr_econ(&rng::gaussian_matrix(&mut g, n, n)).0;
    let mut lambda = bulk.clone();
    lambda[..5].fill(100.0);
    let mut flat = bulk;
    flat[..5].fill(1.0);
    (from_svd(&u, &lambda, &u), from_svd(&u, &flat, &u))
}

#[test]
fn nystrom_pcg_removes_the_outliers() {
    // CG resolves a few isolated outliers in about one step each, so the
    // deflated count is bounded below by the bulk-only count, not by a
    // fixed fraction of the plain count.
    let n = 300;
    let mut fewer = 0;
    for seed in 0..100 {
        let (a, flat) = spiked(seed, n);
        let b = rng::gaussian_vector(&mut rng::stream(seed, 78), n);
        let plain = cg(&a, &b, 1e-8, 2000).unwrap();
        let bulk_only = cg(&flat, &b, 1e-8, 2000).unwrap();
        let pre = nystrom_pcg(&a, &b, 10, 30, 1e-8, 2000, seed).unwrap();
        assert!(pre.converged && pre.residual_norm <= 1e-8 * b.norm() * 1.01);
        assert!(pre.iterations <= bulk_only.iterations + 3, "seed {seed}: {} vs {}", pre.iterations, bulk_only.iterations);
        if pre.iterations < plain.iterations {
            fewer += 1;
        }
    }
    assert!(fewer >= 95, "{fewer}/100");
}

#[test]
fn exact_deflation_flattens_top_eigenvalues() {
    let n = 30;
    let lambda: Vec<f64> = (0..n).map(|j| 50.0 / (1.0 + j as f64)).collect();
    let mut g = rng::stream(10, 0);
    let u = qr_econ(&rng::gaussian_matrix(&mut g, n, n)).0;
    let a = from_svd(&u, &lambda, &u);
    let k = 4;
    let m = Preconditioner::NystromDeflation { u: u.columns(0, k).into_owned(), d: lambda[..k].to_vec(), alpha: lambda[k - 1] };
    let minv = Matrix::from_columns(&(0..n).map(|j| m.apply_inverse(&Matrix::identity(n, n).column(j).into_owned())).collect::<Vec<_>>());
    // M^{-1} A is similar to M^{-1/2} A M^{-1/2}.
    let (vals, _) = eig_sym(&sym_sqrt_conj(&minv, &a));
    let mut expected: Vec<f64> = lambda[k..].to_vec();
    expected.extend(std::iter::repeat(lambda[k - 1]).take(k));
    expected.sort_by(f64::total_cmp);
    for (v, e) in vals.iter().zip(&expected) {
        assert!((v - e).abs() < 1e-8 * spectral_norm(&a), "{v} vs {e}");
    }
}

fn sym_sqrt_conj(minv: &Matrix, a: &Matrix) -> Matrix {
    let (w, v) = eig_sym(minv);
    let half: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let s = from_svd(&v, &half, &v);
    &s * a * &s
}

#[test]
fn nystrom_pcg_rejects_indefinite() {
    let a = Matrix::from_diagonal(&Vector::from_vec((0..20).map(|i| if i < 10 { 1.0 } else { -1.0 }).collect()));
    let b = Vector::from_element(20, 1.0);
    assert!(matches!(nystrom_pcg(&a, &b, 3, 10, 1e-8, 50, 0), Err(crate::Error::NotPd(_))));
}
