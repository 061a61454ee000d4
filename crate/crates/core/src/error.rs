use thiserror::Error;

/// Errors raised while building or evaluating the ensemble.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The domain parameters (N, q) do not describe a physical domain.
    #[error("invalid domain: {0}")]
    Domain(String),

    /// A numeric input is out of range or not finite.
    #[error("invalid input: {0}")]
    Input(String),

    /// A test observable produced non-finite values or an inconsistent derivative.
    #[error("observable `{label}`: {reason}")]
    Observable { label: String, reason: String },

    #[error("invalid finite-difference configuration: {0}")]
    Config(String),

    /// The requested charge or population lies on or beyond the asymptotes ±q.
    #[error("target {target} is unreachable: must lie strictly inside ({lower}, {upper})")]
    UnreachableTarget { target: f64, lower: f64, upper: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
