//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("variable x{index} out of range 1..={max} at byte {offset}")]
    VarOutOfRange {
        index: usize,
        max: usize,
        offset: usize,
    },

    #[error("unknown function '{name}' at byte {offset}")]
    UnknownFunction { name: String, offset: usize },

    #[error("domain error: {kind} in subexpression `{subexpr}`")]
    Domain {
        kind: DomainErrorKind,
        subexpr: String,
    },

    #[error("metric not positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },

    #[error("{what} requires horizontal dimension >= 3, got l = {l}")]
    EllTooSmall { what: &'static str, l: usize },

    #[error("degenerate plane: Gram determinant {det:e} <= 1e-12")]
    DegeneratePlane { det: f64 },

    #[error("invalid manifold: {0}")]
    InvalidManifold(String),

    #[error("manifold JSON: {0}")]
    ManifoldJson(String),

    #[error("no admissible sample point found after {tries} attempts: {last}")]
    SamplingExhausted { tries: usize, last: String },

    #[error("unknown catalog entry '{0}'")]
    UnknownCatalogEntry(String),

    #[error("unknown check id '{0}'")]
    UnknownCheck(String),

    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DomainErrorKind {
    #[error("division by zero")]
    DivisionByZero,
    #[error("log of non-positive value")]
    LogNonPositive,
    #[error("sqrt of non-positive value")]
    SqrtNonPositive,
    #[error("negative power of zero")]
    NegativePowerOfZero,
}
