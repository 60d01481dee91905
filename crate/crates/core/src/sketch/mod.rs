//! Random dimension-reduction maps, leverage scores, and randomized matrix
//! multiplication.
//!
//! A `SketchOperator` is a `d x n` random matrix `S`. Embeddings act as
//! `S A`; rangefinder-style test matrices are `Omega = S'` and act as `A Omega`.

mod sampling;
mod transform;

pub use sampling::{approx_matmul, coherence, leverage_scores, LeverageScores, MatmulMode};
pub use transform::Transform;

use std::fmt;
use std::sync::Arc;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::dense::{qr_econ, LinearOperator, Matrix, Vector};
use crate::error::{dims, mismatch, Error, Result};
use crate::rng::{self, AliasTable};
use transform::Plan;

/// Coordinate-sampling distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CoordMode {
    Uniform,
    /// Explicit sampling probabilities, typically leverage scores.
    Leverage(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SketchKind {
    Gaussian,
    /// Haar-distributed matrix with orthonormal rows (or columns when `d > n`).
    PartialIsometry,
    /// `zeta` nonzeros of random sign per column.
    SparseSign { zeta: usize },
    /// Subsampled randomized trigonometric transform `sqrt(n/d) R F E Pi`.
    Srtt { transform: Transform },
    /// Row-wise Khatri-Rao product of Gaussian factors; `factors` lists the
    /// input dimension of each factor and must multiply to `n`.
    TensorKR { factors: Vec<usize> },
    /// Sampling `d` coordinates with replacement.
    CoordSample { mode: CoordMode },
}

impl SketchKind {
    /// Sparse sign map with the usual choice `zeta = min(d, 8)`.
    pub fn sparse_default(d: usize) -> Self {
        SketchKind::SparseSign { zeta: d.clamp(1, 8) }
    }

    pub fn srtt() -> Self {
        SketchKind::Srtt { transform: Transform::Dht }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Scaling {
    /// `E ||S x||^2 = ||x||^2`.
    #[default]
    Isotropic,
    /// `sqrt(d)` times the isotropic map; for Gaussian maps, standard normal entries.
    UnitVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `S A` (or `S' A`).
    Left,
    /// `A S` (or `A S'`).
    Right,
}

#[derive(Clone)]
enum Repr {
    Dense(Matrix),
    /// Column `j` of S has nonzeros `vals[j*zeta..]` in rows `rows[j*zeta..]`.
    Sparse { zeta: usize, rows: Vec<usize>, vals: Vec<f64> },
    Srtt {
        transform: Transform,
        signs: Vec<f64>,
        perm: Vec<usize>,
        rows: Vec<usize>,
        scale: f64,
        plan: Arc<Plan>,
    },
    Tensor { factors: Vec<Matrix>, scale: f64, dense: Matrix },
    Coord { idx: Vec<usize>, weights: Vec<f64> },
}

/// A seeded random linear map `S: R^n -> R^d`.
#[derive(Clone)]
pub struct SketchOperator {
    pub kind: SketchKind,
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    pub scaling: Scaling,
    repr: Repr,
}

impl fmt::Debug for SketchOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SketchOperator")
            .field("kind", &self.kind)
            .field("d", &self.d)
            .field("n", &self.n)
            .field("seed", &self.seed)
            .field("scaling", &self.scaling)
            .finish()
    }
}

/// Draw a sketching operator. Identical arguments give identical realizations.
pub fn make_sketch(kind: SketchKind, d: usize, n: usize, seed: u64, scaling: Scaling) -> Result<SketchOperator> {
    if d == 0 || n == 0 {
        return dims(format!("sketch dimensions must be positive, got d={d}, n={n}"));
    }
    let unit = match scaling {
        Scaling::Isotropic => 1.0,
        Scaling::UnitVariance => (d as f64).sqrt(),
    };
    let repr = match &kind {
        SketchKind::Gaussian => {
            let s = unit / (d as f64).sqrt();
            let cols = crate::par::map_range(n, |j| {
                let mut r = rng::stream(seed, j as u64);
                rng::gaussian_vector(&mut r, d) * s
            });
            Repr::Dense(Matrix::from_columns(&cols))
        }
        SketchKind::PartialIsometry => Repr::Dense(haar_partial_isometry(d, n, seed) * unit),
        SketchKind::SparseSign { zeta } => {
            let zeta = *zeta;
            if zeta < 1 || zeta > d {
                return dims(format!("sparse sign map needs 1 <= zeta <= d, got zeta={zeta}, d={d}"));
            }
            let v = unit / (zeta as f64).sqrt();
            let cols = crate::par::map_range(n, |j| {
                let mut r = rng::stream(seed, j as u64);
                let rows = index::sample(&mut r, d, zeta).into_vec();
                let vals: Vec<f64> = (0..zeta).map(|_| v * rng::rademacher(&mut r)).collect();
                (rows, vals)
            });
            let mut rows = Vec::with_capacity(n * zeta);
            let mut vals = Vec::with_capacity(n * zeta);
            for (r, v) in cols {
                rows.extend(r);
                vals.extend(v);
            }
            Repr::Sparse { zeta, rows, vals }
        }
        SketchKind::Srtt { transform } => {
            if d > n {
                return dims(format!("SRTT needs d <= n, got d={d}, n={n}"));
            }
            let mut r = rng::stream(rng::derive(seed, 1), 0);
            let signs: Vec<f64> = (0..n).map(|_| rng::rademacher(&mut r)).collect();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng::stream(rng::derive(seed, 2), 0));
            let rows = index::sample(&mut rng::stream(rng::derive(seed, 3), 0), n, d).into_vec();
            Repr::Srtt {
                transform: *transform,
                signs,
                perm,
                rows,
                scale: unit * (n as f64 / d as f64).sqrt(),
                plan: Arc::new(Plan::new(n)),
            }
        }
        SketchKind::TensorKR { factors } => {
            if factors.is_empty() || factors.iter().product::<usize>() != n || factors.contains(&0) {
                return dims(format!("tensor factor dimensions {factors:?} do not multiply to n={n}"));
            }
            let fs: Vec<Matrix> = factors
                .iter()
                .enumerate()
                .map(|(i, &ni)| {
                    let mut r = rng::stream(rng::derive(seed, 4), i as u64);
                    rng::gaussian_matrix(&mut r, d, ni)
                })
                .collect();
            let scale = unit / (d as f64).sqrt();
            let mut dense = Matrix::from_element(d, 1, scale);
            for f in &fs {
                dense = khatri_rao_rows(&dense, f);
            }
            Repr::Tensor { factors: fs, scale, dense }
        }
        SketchKind::CoordSample { mode } => {
            let probs = match mode {
                CoordMode::Uniform => vec![1.0 / n as f64; n],
                CoordMode::Leverage(p) => {
                    if p.len() != n {
                        return mismatch(format!("{} sampling probabilities for n={n}", p.len()));
                    }
                    let total: f64 = p.iter().sum();
                    if p.iter().any(|&x| !(x >= 0.0)) || (total - 1.0).abs() > 1e-12 {
                        return Err(Error::InvalidArgument(format!(
                            "sampling probabilities must be nonnegative and sum to 1 (sum = {total})"
                        )));
                    }
                    p.clone()
                }
            };
            let table = AliasTable::new(&probs).ok_or(Error::DegenerateDistribution)?;
            let mut r = rng::stream(seed, 0);
            let idx: Vec<usize> = (0..d).map(|_| table.sample(&mut r)).collect();
            let weights = idx.iter().map(|&i| unit / (d as f64 * probs[i]).sqrt()).collect();
            Repr::Coord { idx, weights }
        }
    };
    Ok(SketchOperator { kind, d, n, seed, scaling, repr })
}

fn haar_partial_isometry(d: usize, n: usize, seed: u64) -> Matrix {
    let (tall_rows, tall_cols) = if d <= n { (n, d) } else { (d, n) };
    let mut r = rng::stream(seed, 0);
    let g = rng::gaussian_matrix(&mut r, tall_rows, tall_cols);
    let (mut q, rr) = qr_econ(&g);
    // sign correction makes Q Haar-distributed rather than QR-convention biased
    for j in 0..tall_cols {
        if rr[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if d <= n {
        q.transpose() * (n as f64 / d as f64).sqrt()
    } else {
        q
    }
}

/// Rows `(a kr b)_{r,:} = kron(a_{r,:}, b_{r,:})`.
fn khatri_rao_rows(a: &Matrix, b: &Matrix) -> Matrix {
    let (d, na, nb) = (a.nrows(), a.ncols(), b.ncols());
    Matrix::from_fn(d, na * nb, |r, c| a[(r, c / nb)] * b[(r, c % nb)])
}

impl SketchOperator {
    /// `S A`, with `A` having `n` rows.
    pub fn left(&self, a: &Matrix) -> Result<Matrix> {
        if a.nrows() != self.n {
            return mismatch(format!("sketch is {}x{}, operand has {} rows", self.d, self.n, a.nrows()));
        }
        Ok(match &self.repr {
            Repr::Dense(s) | Repr::Tensor { dense: s, .. } => crate::dense::par_matmul(s, a),
            _ => self.columnwise(a, self.d, |x, out| self.apply_col(x, out)),
        })
    }

    /// `S' A`, with `A` having `d` rows.
    pub fn left_adjoint(&self, a: &Matrix) -> Result<Matrix> {
        if a.nrows() != self.d {
            return mismatch(format!("sketch is {}x{}, operand for S' has {} rows", self.d, self.n, a.nrows()));
        }
        Ok(match &self.repr {
            Repr::Dense(s) | Repr::Tensor { dense: s, .. } => crate::dense::par_tr_matmul(s, a),
            _ => self.columnwise(a, self.n, |y, out| self.apply_adjoint_col(y, out)),
        })
    }

    /// `A S`, with `A` having `d` columns.
    pub fn right(&self, a: &Matrix) -> Result<Matrix> {
        Ok(self.left_adjoint(&a.transpose())?.transpose())
    }

    /// `A S'`, with `A` having `n` columns; this is `A Omega` for the test matrix `Omega = S'`.
    pub fn right_adjoint(&self, a: &Matrix) -> Result<Matrix> {
        Ok(self.left(&a.transpose())?.transpose())
    }

    /// Dense `d x n` realization.
    pub fn materialize(&self) -> Matrix {
        match &self.repr {
            Repr::Dense(s) | Repr::Tensor { dense: s, .. } => s.clone(),
            _ => self.left(&Matrix::identity(self.n, self.n)).expect("conforming"),
        }
    }

    /// The `n x d` test matrix `Omega = S'`.
    pub fn test_matrix(&self) -> Matrix {
        match &self.repr {
            Repr::Dense(s) | Repr::Tensor { dense: s, .. } => s.transpose(),
            _ => self.left_adjoint(&Matrix::identity(self.d, self.d)).expect("conforming"),
        }
    }

    /// `S (x_1 kron ... kron x_r)` for a tensor map, computed factorwise as the
    /// elementwise product of the factor images.
    pub fn apply_kron(&self, parts: &[Vector]) -> Result<Vector> {
        let Repr::Tensor { factors, scale, .. } = &self.repr else {
            return Err(Error::InvalidArgument("apply_kron needs a tensor sketch".into()));
        };
        if parts.len() != factors.len() || parts.iter().zip(factors).any(|(p, f)| p.len() != f.ncols()) {
            return mismatch("Kronecker factors do not match the tensor sketch");
        }
        let mut out = Vector::from_element(self.d, *scale);
        for (p, f) in parts.iter().zip(factors) {
            out.component_mul_assign(&(f * p));
        }
        Ok(out)
    }

    fn columnwise(&self, a: &Matrix, rows: usize, f: impl Fn(&[f64], &mut [f64]) + Sync + Send) -> Matrix {
        let mut out = Matrix::zeros(rows, a.ncols());
        if rows == 0 {
            return out;
        }
        let src = a.as_slice();
        let m = a.nrows();
        crate::par::for_each_chunk_mut(out.as_mut_slice(), rows, |j, col| f(&src[j * m..(j + 1) * m], col));
        out
    }

    fn apply_col(&self, x: &[f64], out: &mut [f64]) {
        match &self.repr {
            Repr::Sparse { zeta, rows, vals } => {
                for (j, &xj) in x.iter().enumerate() {
                    if xj != 0.0 {
                        for t in j * zeta..(j + 1) * zeta {
                            out[rows[t]] += vals[t] * xj;
                        }
                    }
                }
            }
            Repr::Srtt { transform, signs, perm, rows, scale, plan } => {
                let mut w: Vec<f64> = (0..self.n).map(|i| x[perm[i]] * signs[i]).collect();
                let mut buf = Vec::with_capacity(self.n);
                plan.forward(*transform, &mut w, &mut buf);
                for (r, &i) in rows.iter().enumerate() {
                    out[r] = scale * w[i];
                }
            }
            Repr::Coord { idx, weights } => {
                for (r, (&i, &w)) in idx.iter().zip(weights).enumerate() {
                    out[r] = w * x[i];
                }
            }
            Repr::Dense(_) | Repr::Tensor { .. } => unreachable!("dense sketches use matmul"),
        }
    }

    fn apply_adjoint_col(&self, y: &[f64], out: &mut [f64]) {
        match &self.repr {
            Repr::Sparse { zeta, rows, vals } => {
                for (j, o) in out.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for t in j * zeta..(j + 1) * zeta {
                        s += vals[t] * y[rows[t]];
                    }
                    *o = s;
                }
            }
            Repr::Srtt { transform, signs, perm, rows, scale, plan } => {
                let mut w = vec![0.0; self.n];
                for (r, &i) in rows.iter().enumerate() {
                    w[i] = scale * y[r];
                }
                let mut buf = Vec::with_capacity(self.n);
                plan.adjoint(*transform, &mut w, &mut buf);
                for i in 0..self.n {
                    out[perm[i]] = w[i] * signs[i];
                }
            }
            Repr::Coord { idx, weights } => {
                for (r, (&i, &w)) in idx.iter().zip(weights).enumerate() {
                    out[i] += w * y[r];
                }
            }
            Repr::Dense(_) | Repr::Tensor { .. } => unreachable!("dense sketches use matmul"),
        }
    }
}

impl LinearOperator for SketchOperator {
    fn nrows(&self) -> usize {
        self.d
    }
    fn ncols(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &Vector) -> Vector {
        self.left(&Matrix::from_column_slice(x.len(), 1, x.as_slice()))
            .expect("conforming")
            .column(0)
            .into_owned()
    }
    fn apply_adjoint(&self, y: &Vector) -> Vector {
        self.left_adjoint(&Matrix::from_column_slice(y.len(), 1, y.as_slice()))
            .expect("conforming")
            .column(0)
            .into_owned()
    }
    fn apply_mat(&self, x: &Matrix) -> Matrix {
        self.left(x).expect("conforming")
    }
    fn apply_adjoint_mat(&self, y: &Matrix) -> Matrix {
        self.left_adjoint(y).expect("conforming")
    }
}

/// Apply `S` (or `S'`) to `A` from the given side.
pub fn apply_sketch(s: &SketchOperator, a: &Matrix, side: Side, adjoint: bool) -> Result<Matrix> {
    match (side, adjoint) {
        (Side::Left, false) => s.left(a),
        (Side::Left, true) => s.left_adjoint(a),
        (Side::Right, false) => s.right(a),
        (Side::Right, true) => s.right_adjoint(a),
    }
}

#[cfg(test)]
mod tests;
