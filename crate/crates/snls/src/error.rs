//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A field contains NaN or infinite entries.
    #[error("corrupt field: non-finite values present")]
    CorruptField,

    /// A Lebesgue exponent outside `[1, inf]` was requested.
    #[error("invalid exponent: r = {0} (need r >= 1)")]
    InvalidExponent(f64),

    /// The requested (p, r) pair violates the admissibility range.
    #[error("not admissible: r = {r} is out of range for dimension n = {n}")]
    NotAdmissible { n: usize, r: f64 },

    /// Norm of an empty trajectory was requested.
    #[error("empty trajectory")]
    EmptyTrajectory,

    /// A probe ratio was requested for identically-zero input.
    #[error("degenerate probe: zero input")]
    DegenerateProbe,

    /// Quadrature or lookup at a time outside the sampled range.
    #[error("time {0} outside the sampled range")]
    TimeOutOfRange(f64),

    /// Non-finite values appeared during time stepping.
    #[error("blow-up detected at t = {0}")]
    BlowUp(f64),

    /// Successive fixed-point iterates stopped contracting.
    #[error("not contracting -- shrink T0 (distance ratio {0:.3} for 3 consecutive iterations)")]
    NotContracting(f64),

    /// Invalid parameter combination at construction time.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A capability intentionally left out of this build.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Refusal to overwrite an output produced by a different configuration.
    #[error("output {path} was produced by config hash {found}, expected {expected}; pass --force to overwrite")]
    HashMismatch {
        path: String,
        found: String,
        expected: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    /// True for failures of the numerics rather than of the setup.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::CorruptField | Error::BlowUp(_) | Error::NotContracting(_)
        )
    }
}
