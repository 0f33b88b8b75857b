use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument or configuration field is outside its valid domain.
    #[error("invalid {field}: {reason}")]
    InvalidInput { field: &'static str, reason: String },

    #[error("pass sampling too coarse: {samples} samples at step {step_s} s (need at least {min})")]
    TooFewSamples {
        samples: usize,
        step_s: f64,
        min: usize,
    },

    #[error("satellite is geostationary relative to the ground point; it has no pass")]
    NoPass,

    #[error("ephemeris epoch {epoch_s} s is {age_s:.3} s from request time (validity {validity_s} s)")]
    StaleEphemeris {
        epoch_s: f64,
        age_s: f64,
        validity_s: f64,
    },

    /// Truncated expectation still leaves most of the probability mass unresolved.
    #[error("expected usage did not converge: residual {residual:.3e} after truncation (partial sum {partial:.3})")]
    NonConvergence { partial: f64, residual: f64 },

    #[error("transmission of {duration_ms} ms exceeds the largest repetition level {max}")]
    RepetitionsExceeded { duration_ms: u64, max: u32 },

    #[error("scenario has no `{0}` section")]
    MissingSection(&'static str),

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            field,
            reason: reason.into(),
        }
    }
}

/// Reject non-finite or non-positive values.
pub(crate) fn require_positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite and > 0, got {value}")))
    }
}

pub(crate) fn require_non_negative(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite and >= 0, got {value}")))
    }
}
