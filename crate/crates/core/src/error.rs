use thiserror::Error;

/// Errors raised by the exact engine and the verification layers above it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("singular matrix: rank {rank} < {dim}")]
    Singular { rank: usize, dim: usize },
    #[error("{what} is not in the symplectic algebra")]
    NotInSp { what: String },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("matrix is not nilpotent (power {power} is nonzero)")]
    NotNilpotent { power: usize },
    #[error("family not closed: {0}")]
    NotClosed(String),
    #[error("hypothesis failed: {0}")]
    Hypothesis(String),
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
    #[error("input outside supported class: {0}")]
    OutsideClass(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
