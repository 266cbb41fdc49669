use thiserror::Error;

/// Library-wide error type. Variants map onto the failure classes the
/// operations document: bad configuration, shape mismatches, state-space
/// blowup, misuse of an aggregator/fitter, out-of-domain parameters,
/// rank-deficient fits, and iterative solvers that do not settle.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("rank deficiency: {0}")]
    Rank(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
