//! Crate-wide error type.
//!
//! Variants map onto the CLI exit codes: `Config` -> 2, `Convergence` -> 3,
//! `Invariant` -> 4. `Domain` is a precondition failure on a numerical
//! routine and is treated as a config error by the CLI.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad user input: unparsable config, flag out of range, malformed table.
    #[error("config error: {0}")]
    Config(String),

    /// An argument violated a documented precondition (e.g. |lambda| > 2*sqrt(q)).
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative scheme failed to reach its tolerance.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A structural invariant (band count, monotonicity, ...) was violated.
    #[error("invariant violation: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the CLI for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) => 2,
            Error::Convergence(_) => 3,
            Error::Invariant(_) => 4,
        }
    }
}
