//! Crate-wide error type.
//!
//! Numerical divergence is data in some contexts (finiteness checks report it)
//! and an error in others (a functional that must be finite failed to
//! stabilize); the `Divergent` variant carries the cutoff and the last
//! estimate so callers can do either.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An integral failed to stabilize within the tail tolerance at the
    /// maximal radial cutoff.
    #[error("integral did not stabilize: estimate {estimate} at cutoff {cutoff} (tail bound {tail_bound})")]
    Divergent {
        estimate: f64,
        cutoff: f64,
        tail_bound: f64,
    },

    /// Degenerate statistical input (too few samples, zero variance).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A simulation state stopped being finite or real.
    #[error("unstable simulation state: {0}")]
    Instability(String),
}

pub type Result<T> = std::result::Result<T, Error>;
