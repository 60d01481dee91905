//! Interpolative decompositions and CUR.

use serde::{Deserialize, Serialize};

use super::skeleton_block;
use crate::dense::{cpqr, pinv_solve, pinv_solve_right, select_columns, select_rows, solve_upper, Matrix};
use crate::error::{dims, Result};
use crate::sketch::{make_sketch, Scaling, SketchKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdSide {
    Row,
    Col,
}

/// One-sided ID. Row side: `A ~ interp * skeleton` with `skeleton = A(indices, :)`
/// and `interp(indices, :) = I`. Column side: `A ~ skeleton * interp` with
/// `skeleton = A(:, indices)` and `interp(:, indices) = I`.
#[derive(Debug, Clone)]
pub struct InterpolativeDecomposition {
    pub side: IdSide,
    pub indices: Vec<usize>,
    pub interp: Matrix,
    pub skeleton: Matrix,
}

impl InterpolativeDecomposition {
    pub fn reconstruct(&self) -> Matrix {
        match self.side {
            IdSide::Row => &self.interp * &self.skeleton,
            IdSide::Col => &self.skeleton * &self.interp,
        }
    }
}

/// `A ~ x * A(rows, cols) * z`.
#[derive(Debug, Clone)]
pub struct TwoSidedId {
    pub x: Matrix,
    pub skeleton: Matrix,
    pub z: Matrix,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl TwoSidedId {
    pub fn reconstruct(&self) -> Matrix {
        &self.x * &self.skeleton * &self.z
    }
}

/// `A ~ C U R` with `C = A(:, cols)`, `R = A(rows, :)` and `U = C^+ A R^+`.
#[derive(Debug, Clone)]
pub struct Cur {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub c: Matrix,
    pub u: Matrix,
    pub r: Matrix,
}

impl Cur {
    pub fn reconstruct(&self) -> Matrix {
        &self.c * &self.u * &self.r
    }

    /// Linking matrix for a given skeleton, by two QR-based least-squares solves.
    pub fn from_skeleton(a: &Matrix, rows: &[usize], cols: &[usize]) -> Self {
        let c = select_columns(a, cols);
        let r = select_rows(a, rows);
        let u = pinv_solve_right(&pinv_solve(&c, a), &r);
        Self { rows: rows.to_vec(), cols: cols.to_vec(), c, u, r }
    }
}

/// Deterministic row ID of `y`: `y ~ x * y(rows, :)` from `k` steps of
/// column-pivoted QR on `y'`.
pub fn row_id(y: &Matrix, k: usize) -> (Vec<usize>, Matrix) {
    let m = y.nrows();
    let k = k.min(m).min(y.ncols());
    let f = cpqr(&y.transpose(), k);
    let rows: Vec<usize> = f.perm[..k].to_vec();
    let r11 = f.r.view((0, 0), (k, k)).into_owned();
    let r12 = f.r.view((0, k), (k, m - k)).into_owned();
    // A rank-deficient leading block would make the triangular solve blow up.
    let t = if f.rank(1e-12) >= k { solve_upper(&r11, &r12) } else { pinv_solve(&r11, &r12) };
    let mut x = Matrix::zeros(m, k);
    for (j, &i) in rows.iter().enumerate() {
        x[(i, j)] = 1.0;
    }
    for (j, &i) in f.perm[k..].iter().enumerate() {
        for c in 0..k {
            x[(i, c)] = t[(c, j)];
        }
    }
    (rows, x)
}

fn check_rank(m: usize, n: usize, k: usize, p: usize) -> Result<()> {
    if k == 0 || k + p > m.min(n) {
        return dims(format!("need 1 <= k and k + p <= {}, got k={k}, p={p}", m.min(n)));
    }
    Ok(())
}

/// Randomized ID: the skeleton is picked from the `k + p` column sample
/// `A Omega` (row side) or `A' Omega` (column side).
pub fn randomized_id(a: &Matrix, k: usize, p: usize, side: IdSide, seed: u64) -> Result<InterpolativeDecomposition> {
    let (m, n) = a.shape();
    check_rank(m, n, k, p)?;
    match side {
        IdSide::Row => {
            let s = make_sketch(SketchKind::Gaussian, k + p, n, seed, Scaling::UnitVariance)?;
            let y = s.right_adjoint(a)?;
            let (rows, x) = row_id(&y, k);
            let skeleton = select_rows(a, &rows);
            Ok(InterpolativeDecomposition { side, indices: rows, interp: x, skeleton })
        }
        IdSide::Col => {
            let s = make_sketch(SketchKind::Gaussian, k + p, m, seed, Scaling::UnitVariance)?;
            let y = s.right_adjoint(&a.transpose())?;
            let (cols, x) = row_id(&y, k);
            let skeleton = select_columns(a, &cols);
            Ok(InterpolativeDecomposition { side, indices: cols, interp: x.transpose(), skeleton })
        }
    }
}

/// Two-sided ID: a randomized one-sided ID along the longer dimension, then a
/// deterministic ID of the selected `k` columns (or rows).
pub fn two_sided_id(a: &Matrix, k: usize, p: usize, seed: u64) -> Result<TwoSidedId> {
    let (m, n) = a.shape();
    check_rank(m, n, k, p)?;
    if m >= n {
        let col = randomized_id(a, k, p, IdSide::Col, seed)?;
        let (rows, x) = row_id(&col.skeleton, k);
        let skeleton = select_rows(&col.skeleton, &rows);
        Ok(TwoSidedId { x, skeleton, z: col.interp, rows, cols: col.indices })
    } else {
        let row = randomized_id(a, k, p, IdSide::Row, seed)?;
        let (cols, zt) = row_id(&row.skeleton.transpose(), k);
        let skeleton = skeleton_block(a, &row.indices, &cols);
        Ok(TwoSidedId { x: row.interp, skeleton, z: zt.transpose(), rows: row.indices, cols })
    }
}

/// CUR on the two-sided ID skeleton.
pub fn cur(a: &Matrix, k: usize, p: usize, seed: u64) -> Result<Cur> {
    let t = two_sided_id(a, k, p, seed)?;
    Ok(Cur::from_skeleton(a, &t.rows, &t.cols))
}
