use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter or state field violates its invariant.
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: String, reason: String },

    /// An argument lies outside the domain of a model function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("program duration tau = {tau} exceeds the horizon T = {horizon}")]
    InvalidPolicy { tau: f64, horizon: f64 },

    #[error("time {t} is outside the trajectory range [0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("non-finite state encountered at t = {t}")]
    NonFinite { t: f64 },
}

impl Error {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical pipeline, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepSizeUnderflow { .. } | Error::NonFinite { .. }
        )
    }
}
