use thiserror::Error;

/// Errors raised by the conformal layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("target coverage must lie strictly between 0 and 1, got {0}")]
    InvalidLevel(f64),

    #[error("{what} at step {t} is not finite ({value})")]
    NonFinite { what: &'static str, t: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("evaluation range {start}..={end} is empty or outside 1..={len}")]
    BadRange { start: usize, end: usize, len: usize },

    #[error("sequence lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("every interval in the range has infinite width ({count} steps)")]
    AllInfinite { count: usize },

    #[error("window length {m} must lie in 1..={len}")]
    BadWindow { m: usize, len: usize },

    #[error("ARMA specification is not stationary (|psi| = {0} >= 1)")]
    Nonstationary(f64),

    #[error("empty input")]
    Empty,
}

pub type Result<T> = std::result::Result<T, Error>;
