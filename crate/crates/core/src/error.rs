use thiserror::Error;

/// Failures reported by the numerical routines.
///
/// Conditions that the algorithms treat as soft outcomes (iteration budget
/// exhausted, maximum rank reached, a warm-start breakdown) are reported as
/// flags on the returned values instead.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("matrix is not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),
    #[error("matrix is not positive definite: {0}")]
    NotPd(String),
    #[error("all sampling probabilities are zero")]
    DegenerateDistribution,
    #[error("not enough samples: need at least {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },
    #[error("invalid order: p = {p} exceeds the number of samples k = {k}")]
    InvalidOrder { p: usize, k: usize },
    #[error("function evaluated outside its domain at Ritz node {0:e}")]
    FunctionDomain(f64),
    #[error("sketched matrix is numerically singular")]
    SingularSketch,
    #[error("all rows of the matrix are zero")]
    ZeroMatrix,
    #[error("requested rank {k} exceeds sketch size {l}")]
    RankTooLarge { k: usize, l: usize },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("right-hand side is not orthogonal to the constant vector (1'f = {0:e})")]
    InconsistentRhs(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dims<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidDims(msg.into()))
}

pub(crate) fn mismatch<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::DimMismatch(msg.into()))
}
