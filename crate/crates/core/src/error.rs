//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A mathematical precondition was violated (non-positive frequency,
    /// coincident antennas, argument off the unit circle, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural invariant of an input was violated.
    #[error("validation error: {0}")]
    Validation(String),

    /// External data could not be parsed.
    #[error("format error: {0}")]
    Format(String),

    /// A configuration document could not be interpreted.
    #[error("config error: {0}")]
    Config(String),

    /// A linear system was singular to working precision.
    #[error("singular system in {context} (condition estimate {condition:.3e})")]
    Singular { context: String, condition: f64 },

    /// A matrix expected to be positive semidefinite had a materially
    /// negative eigenvalue.
    #[error("matrix not positive semidefinite: min eigenvalue {min:.6e}, max eigenvalue {max:.6e}")]
    NotPsd { min: f64, max: f64 },

    /// A matrix expected to be Hermitian deviated beyond tolerance.
    #[error("matrix not Hermitian: relative deviation {deviation:.3e} exceeds {tol:.1e}")]
    NotHermitian { deviation: f64, tol: f64 },

    /// An internally computed quantity failed its own consistency check.
    #[error("internal consistency error: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
