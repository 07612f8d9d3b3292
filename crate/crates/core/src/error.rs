use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported dimension {0}: only n = 2 and n = 4 are supported")]
    UnsupportedDimension(usize),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("evaluation point {point:?} coincides with an atom; the value is infinite")]
    AtAtom { point: [f64; 4] },

    #[error("point {point:?} lies outside the sampled region")]
    OutsideDomain { point: [f64; 4] },

    #[error("radius {radius} outside the profile range [{lo}, {hi}]")]
    OutOfRange { radius: f64, lo: f64, hi: f64 },

    #[error("profile is not a homeomorphism: {0}")]
    NotMonotone(String),

    #[error("profile ranges do not overlap; cannot compose")]
    RangeMismatch,

    #[error("weight is not integrable near the origin (local exponent {exponent})")]
    NotIntegrable { exponent: f64 },

    #[error("total mass {alpha} must be below 1")]
    MassTooLarge { alpha: f64 },

    #[error("no tail radius within the sampled range meets the variation threshold {threshold:e}")]
    NoTailRadius { threshold: f64 },

    #[error("measure has atoms inside the decomposition ball; mollify them first")]
    UnmollifiedAtoms,

    #[error("diagnostic failure: {0}")]
    Diagnostic(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
