//! Randomized least-squares and linear-system solvers.

mod kaczmarz;
mod krylov;
mod sketched;
#[cfg(test)]
mod tests;

pub use kaczmarz::{randomized_kaczmarz, randomized_kaczmarz_observed, KaczmarzMode, KaczmarzStep};
pub use krylov::{cg, lsqr, lsqr_from, nystrom_pcg, nystrom_preconditioner, pcg, Preconditioner};
pub use sketched::{iterative_sketch_ls, iterative_sketch_ls_from, sketch_precondition_ls, sketch_precondition_ls_with, sketch_solve_ls, sketched_r};

use serde::{Deserialize, Serialize};

use crate::dense::{LinearOperator, Vector};

/// Iteration cap used when a caller does not supply one.
pub const DEFAULT_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    Lsqr,
    SketchSolve,
    IterativeSketch,
    SketchPrecondition,
    Kaczmarz,
    BlockKaczmarz,
    Cg,
    NystromPcg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsSolution {
    pub x: Vec<f64>,
    /// `||A x - b||`, recomputed from `x`.
    pub residual_norm: f64,
    pub iterations: usize,
    pub method: SolveMethod,
    /// False when an iterative method hit its cap before its stopping test.
    pub converged: bool,
}

impl LsSolution {
    pub(crate) fn new<A: LinearOperator + ?Sized>(
        a: &A,
        b: &Vector,
        x: Vector,
        iterations: usize,
        method: SolveMethod,
        converged: bool,
    ) -> Self {
        let residual_norm = (a.apply(&x) - b).norm();
        Self { x: x.as_slice().to_vec(), residual_norm, iterations, method, converged }
    }

    pub fn x_vector(&self) -> Vector {
        Vector::from_column_slice(&self.x)
    }
}
