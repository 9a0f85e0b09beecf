//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed input file, reported with the offending line number.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The swap references an occurrence that no longer exists in the store.
    #[error("stale occurrence handle: {0}")]
    StaleSwap(String),

    /// Neither aperiodicity condition holds and laziness is disabled in
    /// strict mode; the chain may be periodic.
    #[error("chain may be periodic: {0}")]
    Periodic(String),

    /// State-space enumeration exceeded the configured bound.
    #[error("state space exceeds limit of {limit} states")]
    AtlasLimit { limit: usize },

    #[error("iterative solver did not converge within {0} iterations")]
    NonConvergence(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
