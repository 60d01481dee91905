use super::*;
use crate::dense::{orthonormality_defect, spectral_norm, svd_econ};
use crate::rng;

fn all_kinds(d: usize, n: usize) -> Vec<SketchKind> {
    vec![
        SketchKind::Gaussian,
        SketchKind::PartialIsometry,
        SketchKind::SparseSign { zeta: d.min(4) },
        SketchKind::Srtt { transform: Transform::Dht },
        SketchKind::Srtt { transform: Transform::Dct2 },
        SketchKind::CoordSample { mode: CoordMode::Uniform },
        SketchKind::TensorKR { factors: if n % 4 == 0 { vec![4, n / 4] } else { vec![n] } },
    ]
}

#[test]
fn rejects_bad_dimensions() {
    assert!(matches!(make_sketch(SketchKind::Gaussian, 0, 3, 1, Scaling::Isotropic), Err(Error::InvalidDims(_))));
    assert!(matches!(make_sketch(SketchKind::srtt(), 5, 4, 1, Scaling::Isotropic), Err(Error::InvalidDims(_))));
    assert!(make_sketch(SketchKind::SparseSign { zeta: 5 }, 4, 10, 1, Scaling::Isotropic).is_err());
    assert!(make_sketch(SketchKind::TensorKR { factors: vec![2, 3] }, 4, 10, 1, Scaling::Isotropic).is_err());
}

#[test]
fn gaussian_one_by_one_is_standard_normal_draw() {
    let s = make_sketch(SketchKind::Gaussian, 1, 1, 42, Scaling::UnitVariance).unwrap();
    let want = rng::gaussian_vector(&mut rng::stream(42, 0), 1)[0];
    assert_eq!(s.materialize()[(0, 0)], want);
}

#[test]
fn sparse_sign_columns_have_exactly_zeta_entries() {
    let s = make_sketch(SketchKind::SparseSign { zeta: 3 }, 8, 100, 5, Scaling::Isotropic).unwrap();
    let m = s.materialize();
    let v = 1.0 / 3f64.sqrt();
    for j in 0..100 {
        let nz: Vec<f64> = m.column(j).iter().copied().filter(|&x| x != 0.0).collect();
        assert_eq!(nz.len(), 3);
        assert!(nz.iter().all(|x| (x.abs() - v).abs() < 1e-15));
    }
}

#[test]
fn full_srtt_is_orthogonal() {
    for t in [Transform::Dht, Transform::Dct2] {
        let s = make_sketch(SketchKind::Srtt { transform: t }, 16, 16, 3, Scaling::Isotropic).unwrap();
        let m = s.materialize();
        assert!((&m * m.transpose() - Matrix::identity(16, 16)).amax() < 1e-12);
    }
}

#[test]
fn fast_paths_match_materialization() {
    let mut r = rng::stream(2, 0);
    let a = rng::gaussian_matrix(&mut r, 24, 5);
    let y = rng::gaussian_matrix(&mut r, 6, 3);
    for kind in all_kinds(6, 24) {
        for scaling in [Scaling::Isotropic, Scaling::UnitVariance] {
            let s = make_sketch(kind.clone(), 6, 24, 9, scaling).unwrap();
            let m = s.materialize();
            assert!((s.left(&a).unwrap() - &m * &a).amax() < 1e-12, "{kind:?}");
            assert!((s.left_adjoint(&y).unwrap() - m.tr_mul(&y)).amax() < 1e-12, "{kind:?}");
            let at = a.transpose();
            assert!((s.right_adjoint(&at).unwrap() - &at * m.transpose()).amax() < 1e-12);
            assert!((apply_sketch(&s, &y.transpose(), Side::Right, false).unwrap() - y.transpose() * &m).amax() < 1e-12);
            assert!((s.test_matrix() - m.transpose()).amax() < 1e-12);
        }
    }
}

#[test]
fn srtt_column_energy_two_ways() {
    let s = make_sketch(SketchKind::srtt(), 5, 32, 8, Scaling::Isotropic).unwrap();
    let mut e1 = Matrix::zeros(32, 1);
    e1[(0, 0)] = 1.0;
    let fast = s.left(&e1).unwrap().norm_squared();
    let dense = s.materialize().column(0).norm_squared();
    assert!((fast - dense).abs() < 1e-12);
}

#[test]
fn materialized_gaussian_times_identity() {
    let s = make_sketch(SketchKind::Gaussian, 4, 6, 1, Scaling::Isotropic).unwrap();
    assert_eq!(s.left(&Matrix::identity(6, 6)).unwrap(), s.materialize());
}

#[test]
fn tensor_map_on_kronecker_vectors() {
    let s = make_sketch(SketchKind::TensorKR { factors: vec![3, 3] }, 4, 9, 6, Scaling::Isotropic).unwrap();
    let x = Vector::from_vec(vec![1.0, -2.0, 0.5]);
    let y = Vector::from_vec(vec![0.3, 0.1, 2.0]);
    let kron = Vector::from_fn(9, |i, _| x[i / 3] * y[i % 3]);
    let brute = s.materialize() * &kron;
    let fast = s.apply_kron(&[x, y]).unwrap();
    assert!((brute - fast).amax() < 1e-12);
}

#[test]
fn partial_isometry_has_orthonormal_rows() {
    let s = make_sketch(SketchKind::PartialIsometry, 5, 12, 4, Scaling::Isotropic).unwrap();
    let m = s.materialize().transpose() * (5.0f64 / 12.0).sqrt();
    assert!(orthonormality_defect(&m) < 1e-12);
    let tall = make_sketch(SketchKind::PartialIsometry, 9, 4, 4, Scaling::Isotropic).unwrap();
    assert!(orthonormality_defect(&tall.materialize()) < 1e-12);
}

#[test]
fn sketches_are_deterministic() {
    for kind in all_kinds(6, 24) {
        let a = make_sketch(kind.clone(), 6, 24, 77, Scaling::Isotropic).unwrap().materialize();
        let b = make_sketch(kind.clone(), 6, 24, 77, Scaling::Isotropic).unwrap().materialize();
        assert_eq!(a, b);
        let c = make_sketch(kind, 6, 24, 78, Scaling::Isotropic).unwrap().materialize();
        assert_ne!(a, c);
    }
}

#[test]
fn isotropy_by_monte_carlo() {
    let n = 16;
    let x = Matrix::from_fn(n, 1, |i, _| 1.0 + i as f64 * 0.25);
    let xn = x.norm_squared();
    for kind in all_kinds(4, n) {
        let total: f64 = (0..2000u64)
            .map(|t| make_sketch(kind.clone(), 4, n, 1000 + t, Scaling::Isotropic).unwrap().left(&x).unwrap().norm_squared() / xn)
            .sum();
        let mean = total / 2000.0;
        assert!((0.95..=1.05).contains(&mean), "{kind:?}: {mean}");
    }
}

#[test]
fn gaussian_subspace_embedding() {
    let (n, k) = (200, 10);
    let mut good = 0;
    for t in 0..100u64 {
        let basis = crate::dense::qr_econ(&rng::gaussian_matrix(&mut rng::stream(500 + t, 0), n, k)).0;
        let s = make_sketch(SketchKind::Gaussian, 4 * k, n, t, Scaling::Isotropic).unwrap();
        let sv = svd_econ(&s.left(&basis).unwrap()).s;
        if sv.iter().all(|&x| (0.2..=1.8).contains(&x)) {
            good += 1;
        }
    }
    assert!(good >= 99, "{good}");
}

#[test]
fn johnson_lindenstrauss_distortion() {
    let (n, pts, eps) = (200, 50, 0.5f64);
    let d = (8.0 / (eps * eps) * (pts as f64).ln()).ceil() as usize;
    let x = rng::gaussian_matrix(&mut rng::stream(31, 0), n, pts);
    let mut good = 0;
    for t in 0..100u64 {
        let sx = make_sketch(SketchKind::Gaussian, d, n, t, Scaling::Isotropic).unwrap().left(&x).unwrap();
        let mut ok = true;
        for i in 0..pts {
            for j in 0..i {
                let a = (x.column(i) - x.column(j)).norm();
                let b = (sx.column(i) - sx.column(j)).norm();
                ok &= (b / a - 1.0).abs() <= eps;
            }
        }
        good += ok as usize;
    }
    assert!(good >= 95, "{good}");
}

#[test]
fn leverage_score_examples() {
    let u = Matrix::identity(5, 5).columns(0, 2).into_owned();
    let p = leverage_scores(&u).unwrap().probabilities;
    assert_eq!(p, vec![0.5, 0.5, 0.0, 0.0, 0.0]);
    let q = crate::dense::qr_econ(&rng::gaussian_matrix(&mut rng::stream(1, 0), 4, 4)).0;
    assert!(leverage_scores(&q).unwrap().probabilities.iter().all(|&x| (x - 0.25).abs() < 1e-12));
    let b = crate::dense::qr_econ(&rng::gaussian_matrix(&mut rng::stream(2, 0), 6, 2)).0;
    let p = leverage_scores(&b).unwrap().probabilities;
    let proj = &b * b.transpose();
    for i in 0..6 {
        assert!((p[i] - proj[(i, i)] / 2.0).abs() < 1e-12);
    }
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(matches!(leverage_scores(&(b * 2.0)), Err(Error::NotOrthonormal(_))));
}

#[test]
fn leverage_coordinate_sampling_is_isotropic_on_subspace() {
    let u = crate::dense::qr_econ(&rng::gaussian_matrix(&mut rng::stream(3, 0), 30, 3)).0;
    let p = leverage_scores(&u).unwrap().probabilities;
    let s = make_sketch(SketchKind::CoordSample { mode: CoordMode::Leverage(p) }, 400, 30, 5, Scaling::Isotropic).unwrap();
    let su = s.left(&u).unwrap();
    let sv = svd_econ(&su).s;
    assert!(sv.iter().all(|&x| (0.7..1.3).contains(&x)), "{sv:?}");
}

#[test]
fn approx_matmul_single_atom_is_exact() {
    let b = Matrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
    let c = Matrix::from_row_slice(1, 2, &[4.0, -1.0]);
    for mode in [MatmulMode::Uniform, MatmulMode::Importance] {
        for k in [1, 7] {
            let x = approx_matmul(&b, &c, k, mode, 3).unwrap();
            assert!((x - &b * &c).amax() < 1e-12);
        }
    }
}

#[test]
fn approx_matmul_expectation_over_outcomes() {
    let b = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
    let c = Matrix::from_row_slice(2, 2, &[3.0, 0.0, 1.0, -1.0]);
    for mode in [MatmulMode::Uniform, MatmulMode::Importance] {
        let p = sampling::matmul_probabilities(&b, &c, mode).unwrap();
        let mut expect = Matrix::zeros(2, 2);
        for i in 0..2 {
            let mut counts = [0usize; 2];
            counts[i] = 1;
            expect += sampling::weighted_product(&b, &c, &counts, &p, 1) * p[i];
        }
        assert!((expect - &b * &c).amax() < 1e-12, "{mode:?}");
    }
    let z = Matrix::zeros(2, 2);
    assert_eq!(approx_matmul(&z, &z, 3, MatmulMode::Importance, 1), Err(Error::DegenerateDistribution));
    assert!(matches!(approx_matmul(&b, &Matrix::zeros(3, 2), 3, MatmulMode::Uniform, 1), Err(Error::DimMismatch(_))));
}

#[test]
fn approx_matmul_uniform_sample_complexity() {
    let b = crate::dense::qr_econ(&rng::gaussian_matrix(&mut rng::stream(4, 0), 64, 4)).0.transpose();
    let c = b.transpose();
    let eps = 0.5f64;
    let k = (2.0 / (eps * eps) * coherence(&b) * 8f64.ln()).ceil() as usize;
    let exact = &b * &c;
    let good = (0..100u64)
        .filter(|&t| spectral_norm(&(approx_matmul(&b, &c, k, MatmulMode::Uniform, t).unwrap() - &exact)) <= 1.0)
        .count();
    assert!(good >= 80, "{good}");
}
