//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its allowed range or a combination is
    /// inconsistent (bad delta, infeasible rate, ...).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Matrix/vector dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix expected to be positive semidefinite is not.
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    /// A transmit vector violates the scheme's sparsity rule.
    #[error("sparsity violation: vector {index} breaks the {scheme} constraint")]
    SparsityViolation { index: usize, scheme: &'static str },

    /// Two vectors in a set coincide, so the minimum distance is zero.
    #[error("degenerate set: vectors {a} and {b} coincide within tolerance")]
    DuplicateVectors { a: usize, b: usize },

    /// A metric that divides by the set power was asked of a zero-power set.
    #[error("zero-power transmit set")]
    ZeroPower,

    /// The request cannot be satisfied (e.g. selecting more vectors than the
    /// codebook holds).
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    /// A set/report file failed to parse.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }
}
