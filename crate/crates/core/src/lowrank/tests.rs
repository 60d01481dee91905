use super::*;
use crate::dense::{eig_sym, orthonormality_defect, psd_with_spectrum, spectral_norm, with_spectrum, Matrix, Vector};
use crate::rng;

fn low_rank(seed: u64, m: usize, n: usize, r: usize) -> Matrix {
    let sigma: Vec<f64> = (0..r).map(|j| 2.0 + r as f64 - j as f64).collect();
    with_spectrum(&mut rng::stream(seed, 99), m, n, &sigma)
}

fn rel(b: &Matrix, approx: &Matrix) -> f64 {
    spectral_norm(&(b - approx)) / spectral_norm(b)
}

#[test]
fn rsvd_recovers_exact_rank() {
    let sigma = [9.0, 5.0, 3.0, 1.0];
    let b = with_spectrum(&mut rng::stream(1, 0), 50, 40, &sigma);
    let svd = rsvd(&b, 4, 3, 0, 7).unwrap();
    assert!(rel(&b, &from_svd(&svd.u, &svd.s, &svd.v)) < 1e-10);
    for (s, t) in svd.s.iter().zip(sigma) {
        assert!((s - t).abs() < 1e-9 * t);
    }
    assert!(orthonormality_defect(&svd.u) < 1e-12 && orthonormality_defect(&svd.v) < 1e-12);
}

#[test]
fn rsvd_error_is_rangefinder_error() {
    for seed in 0..20 {
        let sigma: Vec<f64> = (0..30).map(|j| 0.7f64.powi(j)).collect();
        let b = with_spectrum(&mut rng::stream(seed, 5), 60, 45, &sigma);
        let full = rsvd_full(&b, 12, 1, seed).unwrap();
        let e1 = spectral_norm(&(&b - from_svd(&full.svd.u, &full.svd.s, &full.svd.v)));
        let e2 = spectral_norm(&(&b - &full.q * full.q.tr_mul(&b)));
        assert!((e1 - e2).abs() <= 1e-10 * e2.max(1e-300), "seed {seed}: {e1} vs {e2}");
        assert!(full.svd.s.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn rsvd_recovers_spiked_direction() {
    let n = 100;
    let mut hits = 0;
    for seed in 0..100 {
        let mut r = rng::stream(seed, 17);
        let u = rng::gaussian_vector(&mut r, n).normalize();
        let v = rng::gaussian_vector(&mut r, n).normalize();
        let noise = rng::gaussian_matrix(&mut r, n, n) * (0.1 / (n as f64).sqrt());
        let b = &u * v.transpose() + noise;
        let oracle = svd_econ(&b).u.column(0).into_owned();
        let got = rsvd(&b, 1, DEFAULT_P, 2, seed).unwrap();
        let cos = got.u.column(0).dot(&oracle).abs().min(1.0);
        if cos.acos() < 0.15 {
            hits += 1;
        }
    }
    assert!(hits >= 90, "{hits}/100");
}

const DEFAULT_P: usize = crate::rangefinder::DEFAULT_OVERSAMPLE;

#[test]
fn truncation_drops_negligible_modes() {
    let svd = Svd { u: Matrix::identity(4, 4), s: vec![1.0, 0.5, 1e-14, 0.0], v: Matrix::identity(4, 4) };
    assert_eq!(truncate_svd(&svd, 3).s, vec![1.0, 0.5]);
    assert_eq!(truncate_svd(&svd, 1).s, vec![1.0]);
}

#[test]
fn rsvd_rejects_oversized_sample() {
    let b = Matrix::zeros(5, 4);
    assert!(matches!(rsvd(&b, 3, 2, 0, 0), Err(crate::Error::InvalidDims(_))));
}

fn identity_block(x: &Matrix, idx: &[usize], rows: bool) -> f64 {
    let mut worst: f64 = 0.0;
    for (j, &i) in idx.iter().enumerate() {
        for c in 0..idx.len() {
            let v = if rows { x[(i, c)] } else { x[(c, i)] };
            let want = if c == j { 1.0 } else { 0.0 };
            worst = worst.max((v - want).abs());
        }
    }
    worst
}

#[test]
fn row_and_col_id_recover_exact_rank() {
    let a = low_rank(3, 30, 25, 5);
    for side in [IdSide::Row, IdSide::Col] {
        let id = randomized_id(&a, 5, 3, side, 11).unwrap();
        assert!(rel(&a, &id.reconstruct()) < 1e-9, "{side:?}");
        assert!(identity_block(&id.interp, &id.indices, side == IdSide::Row) < 1e-10);
        let mut sorted = id.indices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 5);
    }
}

#[test]
fn row_id_selects_embedded_coordinate_rows() {
    let mut a = Matrix::zeros(12, 8);
    let picks = [2usize, 5, 9];
    let mut r = rng::stream(4, 0);
    for &i in &picks {
        a.set_row(i, &rng::gaussian_vector(&mut r, 8).transpose());
    }
    let id = randomized_id(&a, 3, 2, IdSide::Row, 1).unwrap();
    let mut got = id.indices.clone();
    got.sort_unstable();
    assert_eq!(got, picks);
}

#[test]
fn id_error_is_close_to_optimal_on_decaying_spectrum() {
    let sigma: Vec<f64> = (1..=40).map(|j| 2f64.powi(-j)).collect();
    let a = with_spectrum(&mut rng::stream(8, 1), 40, 40, &sigma);
    let id = randomized_id(&a, 10, 5, IdSide::Row, 3).unwrap();
    let err = spectral_norm(&(&a - id.reconstruct()));
    assert!(err <= 10.0 * sigma[10], "{err:e} vs {:e}", sigma[10]);
    // Deterministic CPQR on the full matrix as the baseline.
    let (rows, x) = row_id(&a, 10);
    let base = spectral_norm(&(&a - &x * crate::dense::select_rows(&a, &rows)));
    assert!(base <= 10.0 * sigma[10]);
}

#[test]
fn two_sided_id_examples() {
    for (m, n) in [(30, 20), (20, 30)] {
        let a = low_rank(9, m, n, 4);
        let t = two_sided_id(&a, 4, 2, 5).unwrap();
        assert!(rel(&a, &t.reconstruct()) < 1e-9);
        assert!(identity_block(&t.x, &t.rows, true) < 1e-10);
        assert!(identity_block(&t.z, &t.cols, false) < 1e-10);
    }
    // Rank 2: third row = row0 + row1, third column = col0 - col1.
    let a = Matrix::from_row_slice(3, 3, &[1.0, 2.0, -1.0, 3.0, 1.0, 2.0, 4.0, 3.0, 1.0]);
    let t = two_sided_id(&a, 2, 1, 0).unwrap();
    assert!(t.skeleton.determinant().abs() > 1e-8);
    assert!((&a - t.reconstruct()).amax() < 1e-12);
}

#[test]
fn cur_examples() {
    let a = low_rank(12, 25, 30, 6);
    let c = cur(&a, 6, 4, 2).unwrap();
    assert!(rel(&a, &c.reconstruct()) < 1e-8);

    let x = Vector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
    let y = Vector::from_vec(vec![2.0, 1.0, -1.0]);
    let a1 = &x * y.transpose();
    let c1 = Cur::from_skeleton(&a1, &[3], &[0]);
    assert!((&a1 - c1.reconstruct()).amax() < 1e-12);

    let sigma: Vec<f64> = (0..30).map(|j| 0.6f64.powi(j)).collect();
    let b = with_spectrum(&mut rng::stream(13, 2), 40, 30, &sigma);
    let t = two_sided_id(&b, 8, 4, 6).unwrap();
    let cu = Cur::from_skeleton(&b, &t.rows, &t.cols);
    let e_id = spectral_norm(&(&b - t.reconstruct()));
    let e_cur = spectral_norm(&(&b - cu.reconstruct()));
    assert!(e_cur <= 5.0 * e_id, "{e_cur:e} vs {e_id:e}");
}

#[test]
fn nystrom_recovers_exact_rank_psd() {
    let a = psd_with_spectrum(&mut rng::stream(2, 0), 40, &[5.0, 3.0, 2.0, 1.0]);
    let f = nystrom(&a, 5, 6, 3).unwrap();
    assert!(rel(&a, &f.reconstruct()) < 1e-8);
    assert!(f.lambda.iter().all(|&l| l >= 0.0));
    assert!(orthonormality_defect(&f.u) < 1e-10);
}

#[test]
fn nystrom_residual_is_psd() {
    for seed in 0..20 {
        let lambda: Vec<f64> = (1..=30).map(|j| 1.0 / (j * j) as f64).collect();
        let a = psd_with_spectrum(&mut rng::stream(seed, 3), 30, &lambda);
        let f = nystrom(&a, 5, 10, seed).unwrap();
        let (vals, _) = eig_sym(&(&a - f.reconstruct()));
        assert!(vals[0] >= -1e-8 * spectral_norm(&a), "seed {seed}: {}", vals[0]);
    }
}

#[test]
fn nystrom_depends_only_on_test_range() {
    let lambda: Vec<f64> = (1..=25).map(|j| 0.8f64.powi(j)).collect();
    let a = psd_with_spectrum(&mut rng::stream(5, 0), 25, &lambda);
    let mut r = rng::stream(5, 1);
    let omega = rng::gaussian_matrix(&mut r, 25, 8);
    let mix = rng::gaussian_matrix(&mut r, 8, 8);
    let f1 = nystrom_with_test_matrix(&a, &omega, 4).unwrap();
    let f2 = nystrom_with_test_matrix(&a, &(&omega * mix), 4).unwrap();
    assert!((f1.reconstruct() - f2.reconstruct()).amax() < 1e-8);
}

#[test]
fn nystrom_rejects_indefinite_and_asymmetric() {
    let a = Matrix::from_diagonal(&Vector::from_vec((0..10).map(|i| if i < 5 { 1.0 } else { -1.0 }).collect()));
    assert!(matches!(nystrom(&a, 2, 6, 0), Err(crate::Error::NotPsd(_))));
    let mut b = Matrix::identity(10, 10);
    b[(0, 1)] = 1.0;
    assert!(matches!(nystrom(&b, 2, 6, 0), Err(crate::Error::NotPsd(_))));
}

#[test]
fn single_view_recovers_exact_rank_both_cores() {
    let k = 4;
    let a = low_rank(21, 40, 35, k);
    for kind in [SketchKindChoice::Sparse, SketchKindChoice::Gauss] {
        let mut sk = kind.init(40, 35, 2 * k, 4 * k, 3);
        stream_update(&mut sk, StreamUpdate::Dense(&a), 1.0).unwrap();
        let three = stream_finalize(&sk, k).unwrap();
        let two = sk.finalize(k, CoreMethod::TwoSketch).unwrap();
        let r3 = from_svd(&three.svd.u, &three.svd.s, &three.svd.v);
        let r2 = from_svd(&two.svd.u, &two.svd.s, &two.svd.v);
        assert!(rel(&a, &r3) < 1e-8);
        assert!(rel(&a, &r2) < 1e-8);
        assert!((&r3 - &r2).amax() < 1e-8 * a.amax());
    }
}

enum SketchKindChoice {
    Sparse,
    Gauss,
}

impl SketchKindChoice {
    fn init(&self, m: usize, n: usize, l: usize, s: usize, seed: u64) -> StreamSketch {
        match self {
            Self::Sparse => stream_init(m, n, l, s, seed).unwrap(),
            Self::Gauss => StreamSketch::new(m, n, l, s, seed, crate::sketch::SketchKind::Gaussian).unwrap(),
        }
    }
}

#[test]
fn stream_updates_are_linear() {
    let (m, n) = (20, 15);
    let mut r = rng::stream(6, 0);
    let h = rng::gaussian_matrix(&mut r, m, n);
    let mut sk = stream_init(m, n, 4, 8, 1).unwrap();
    stream_update(&mut sk, StreamUpdate::Dense(&h), 1.0).unwrap();
    stream_update(&mut sk, StreamUpdate::Dense(&h), -1.0).unwrap();
    let (x, y, z) = sk.accumulators();
    assert!(x.iter().chain(y.iter()).chain(z.iter()).all(|&v| v == 0.0));

    // Dense, sparse and rank-one forms of the same update agree.
    let u = rng::gaussian_vector(&mut r, m);
    let v = rng::gaussian_vector(&mut r, n);
    let uv = &u * v.transpose();
    let trip: Vec<(usize, usize, f64)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (i, j, uv[(i, j)])).collect();
    let mut a = stream_init(m, n, 4, 8, 1).unwrap();
    let mut b = a.clone();
    let mut c = a.clone();
    stream_update(&mut a, StreamUpdate::Dense(&uv), 2.0).unwrap();
    stream_update(&mut b, StreamUpdate::Sparse(&trip), 2.0).unwrap();
    stream_update(&mut c, StreamUpdate::RankOne(&u, &v), 2.0).unwrap();
    for other in [&b, &c] {
        let (x1, y1, z1) = a.accumulators();
        let (x2, y2, z2) = other.accumulators();
        assert!((x1 - x2).amax() < 1e-12 * x1.amax());
        assert!((y1 - y2).amax() < 1e-12 * y1.amax());
        assert!((z1 - z2).amax() < 1e-12 * z1.amax());
    }
}

#[test]
fn stream_errors() {
    let mut sk = stream_init(10, 8, 3, 6, 0).unwrap();
    let bad = Matrix::zeros(8, 10);
    assert!(matches!(stream_update(&mut sk, StreamUpdate::Dense(&bad), 1.0), Err(crate::Error::DimMismatch(_))));
    assert!(matches!(stream_update(&mut sk, StreamUpdate::Sparse(&[(10, 0, 1.0)]), 1.0), Err(crate::Error::DimMismatch(_))));
    assert!(matches!(stream_finalize(&sk, 4), Err(crate::Error::RankTooLarge { k: 4, l: 3 })));
    assert!(stream_init(10, 8, 4, 3, 0).is_err());
}

#[test]
fn stream_envelope_round_trip_and_merge() {
    let (m, n) = (18, 14);
    let mut r = rng::stream(7, 0);
    let h1 = rng::gaussian_matrix(&mut r, m, n);
    let h2 = rng::gaussian_matrix(&mut r, m, n);
    let mut whole = stream_init(m, n, 4, 8, 9).unwrap();
    stream_update(&mut whole, StreamUpdate::Dense(&h1), 1.0).unwrap();
    stream_update(&mut whole, StreamUpdate::Dense(&h2), 1.0).unwrap();

    let mut p1 = stream_init(m, n, 4, 8, 9).unwrap();
    stream_update(&mut p1, StreamUpdate::Dense(&h1), 1.0).unwrap();
    let mut p2 = stream_init(m, n, 4, 8, 9).unwrap();
    stream_update(&mut p2, StreamUpdate::Dense(&h2), 1.0).unwrap();
    let json = serde_json::to_string(&p2.to_envelope()).unwrap();
    let back = StreamSketch::from_envelope(&serde_json::from_str(&json).unwrap()).unwrap();
    p1.merge(&back).unwrap();
    let (x1, y1, z1) = whole.accumulators();
    let (x2, y2, z2) = p1.accumulators();
    assert!((x1 - x2).amax() < 1e-12 && (y1 - y2).amax() < 1e-12 && (z1 - z2).amax() < 1e-12);

    let other = stream_init(m, n, 4, 8, 10).unwrap();
    assert!(p1.merge(&other).is_err());
    // Finalizing twice gives the same answer.
    let f1 = stream_finalize(&whole, 3).unwrap();
    let f2 = stream_finalize(&whole, 3).unwrap();
    assert_eq!(f1.svd.s, f2.svd.s);
}
