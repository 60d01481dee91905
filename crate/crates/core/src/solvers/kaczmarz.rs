//! Randomized Kaczmarz and its block (sketch-and-project) variant.

use serde::{Deserialize, Serialize};

use super::{LsSolution, SolveMethod};
use crate::dense::{pinv_solve, Matrix, Vector};
use crate::error::{mismatch, Error, Result};
use crate::rng::{self, AliasTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KaczmarzMode {
    /// Project onto one equation, sampled with probability proportional to its squared norm.
    Rows,
    /// Project onto the solution set of `S A x = S b` for a fresh `l x m` Gaussian `S`.
    Block(usize),
}

/// State handed to an observer after every step.
#[derive(Debug)]
pub struct KaczmarzStep<'a> {
    pub t: usize,
    /// Sampled equation in row mode.
    pub row: Option<usize>,
    pub x: &'a Vector,
}

/// Kaczmarz iteration for `A x = b` (rows of `A` are the equations), from `x = 0`.
pub fn randomized_kaczmarz(a: &Matrix, b: &Vector, n_iter: usize, mode: KaczmarzMode, seed: u64) -> Result<LsSolution> {
    randomized_kaczmarz_observed(a, b, n_iter, mode, seed, |_| {})
}

pub fn randomized_kaczmarz_observed(
    a: &Matrix,
    b: &Vector,
    n_iter: usize,
    mode: KaczmarzMode,
    seed: u64,
    mut observe: impl FnMut(&KaczmarzStep<'_>),
) -> Result<LsSolution> {
    let (m, n) = a.shape();
    if b.len() != m {
        return mismatch(format!("matrix has {m} rows, right-hand side has {}", b.len()));
    }
    if n_iter == 0 {
        return Err(Error::InvalidArgument("Kaczmarz needs at least one iteration".into()));
    }
    let norms: Vec<f64> = (0..m).map(|i| a.row(i).norm_squared()).collect();
    let table = AliasTable::new(&norms).ok_or(Error::ZeroMatrix)?;
    let mut x = Vector::zeros(n);
    let mut g = rng::stream(seed, 0);
    let method = match mode {
        KaczmarzMode::Rows => SolveMethod::Kaczmarz,
        KaczmarzMode::Block(0) => return Err(Error::InvalidArgument("block size must be at least 1".into())),
        KaczmarzMode::Block(_) => SolveMethod::BlockKaczmarz,
    };
    for t in 0..n_iter {
        let row = match mode {
            KaczmarzMode::Rows => {
                let j = table.sample(&mut g);
                let aj = a.row(j);
                let step = (b[j] - (aj * &x)[0]) / norms[j];
                x.axpy(step, &aj.transpose(), 1.0);
                Some(j)
            }
            KaczmarzMode::Block(l) => {
                let s = rng::gaussian_matrix(&mut g, l, m);
                let sa = &s * a;
                let resid = &s * b - &sa * &x;
                let dx = pinv_solve(&sa, &Matrix::from_column_slice(l, 1, resid.as_slice()));
                x += dx.column(0);
                None
            }
        };
        observe(&KaczmarzStep { t: t + 1, row, x: &x });
    }
    Ok(LsSolution::new(a, b, x, n_iter, method, true))
}
