//! Randomized numerical linear algebra.
//!
//! Sketching operators, Monte-Carlo estimators, randomized low-rank and
//! full-rank factorizations, randomized least-squares solvers, and graph
//! Laplacian solvers built on approximate Cholesky factorization.
//!
//! Every stochastic entry point takes an explicit `seed: u64` and is
//! bit-reproducible for a fixed seed, with or without the `parallel` feature.

pub mod cli;
pub mod dense;
pub mod error;
pub mod estimate;
pub mod fullrank;
pub mod laplacian;
pub mod lowrank;
pub mod par;
pub mod rangefinder;
pub mod rng;
pub mod sketch;
pub mod solvers;

pub use dense::{LinearOperator, Matrix, Vector};
pub use error::{Error, Result};
