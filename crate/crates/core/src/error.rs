use thiserror::Error;

/// Errors raised by signal, channel, device and training operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("signal too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("signal grids do not match: {0}")]
    GridMismatch(String),

    #[error(
        "period of {period_s:e} s is not an integer number of samples at {sample_rate_hz:e} Hz"
    )]
    PeriodOffGrid { period_s: f64, sample_rate_hz: f64 },

    #[error("infeasible filter design: {0}")]
    Infeasible(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
