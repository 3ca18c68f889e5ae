use thiserror::Error;

/// Errors raised by the measure, transform and engine modules.
#[derive(Debug, Error)]
pub enum Error {
    /// A documented precondition does not hold (bad input data).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Structural validation of a measure, map or partition failed.
    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    /// A quantile was requested outside `[0, mass)`.
    #[error("quantile level {level} out of range [0, {mass})")]
    OutOfRange { level: f64, mass: f64 },

    /// A density power left the supported exponent window.
    #[error("density exponent {power} exceeds the supported bound {bound}")]
    DegreeOverflow { power: i32, bound: i32 },

    /// The operation is not defined for numeric (sampled) segments.
    #[error("unsupported transformation class: {0}")]
    Unsupported(String),

    /// An iterative numerical routine failed to reach its tolerance.
    #[error("numeric failure: {what} (achieved {achieved:.3e}, wanted {wanted:.3e})")]
    Numeric {
        what: String,
        achieved: f64,
        wanted: f64,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn numeric(what: impl Into<String>, achieved: f64, wanted: f64) -> Self {
        Error::Numeric {
            what: what.into(),
            achieved,
            wanted,
        }
    }

    /// Process exit code used by the command line front-end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric { .. } => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }

    /// Short machine-readable category name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Precondition(_) => "precondition",
            Error::Invalid { .. } => "invalid",
            Error::OutOfRange { .. } => "out_of_range",
            Error::DegreeOverflow { .. } => "degree_overflow",
            Error::Unsupported(_) => "unsupported",
            Error::Numeric { .. } => "numeric",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
