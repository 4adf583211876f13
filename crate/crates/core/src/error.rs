use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension N = {dim} is not supported (need N >= 3)")]
    Dimension { dim: u32 },

    #[error("exponent q = {q} outside the admissible open interval ({lower}, {upper})")]
    ExponentRange { q: f64, lower: f64, upper: f64 },

    #[error("invalid coupling lambda = {0}")]
    InvalidLambda(f64),

    #[error("no positive decaying solution found: {0}")]
    NoDecayingSolution(String),

    #[error("tolerance not reached: {0}")]
    ToleranceNotReached(String),

    #[error("norm diverges: {0}")]
    DivergentNorm(String),

    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),

    #[error("invalid rescaling: {0}")]
    Rescale(String),

    #[error("profile is not concentrated: v(0) = {v0} <= U_1(0) = {bubble0}")]
    NotConcentrated { v0: f64, bubble0: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("lambda window spans {decades:.2} decades, need at least {required:.2}")]
    InsufficientDecades { decades: f64, required: f64 },

    #[error("decay envelope violated: {0}")]
    EnvelopeViolation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable process exit code for each error kind.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Dimension { .. } => 10,
            Error::ExponentRange { .. } => 11,
            Error::InvalidLambda(_) => 12,
            Error::NoDecayingSolution(_) => 13,
            Error::ToleranceNotReached(_) => 14,
            Error::DivergentNorm(_) => 15,
            Error::DegenerateProfile(_) => 16,
            Error::Rescale(_) => 17,
            Error::NotConcentrated { .. } => 18,
            Error::Fit(_) => 19,
            Error::InsufficientDecades { .. } => 20,
            Error::EnvelopeViolation(_) => 21,
            Error::Domain(_) => 22,
            Error::Parse { .. } => 23,
            Error::Io { .. } => 24,
        }
    }

    /// Short name used in status columns and reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "DimensionError",
            Error::ExponentRange { .. } => "ExponentRangeError",
            Error::InvalidLambda(_) => "InvalidLambda",
            Error::NoDecayingSolution(_) => "NoDecayingSolution",
            Error::ToleranceNotReached(_) => "ToleranceNotReached",
            Error::DivergentNorm(_) => "DivergentNormError",
            Error::DegenerateProfile(_) => "DegenerateProfileError",
            Error::Rescale(_) => "RescaleError",
            Error::NotConcentrated { .. } => "NotConcentratedError",
            Error::Fit(_) => "FitError",
            Error::InsufficientDecades { .. } => "InsufficientDecades",
            Error::EnvelopeViolation(_) => "EnvelopeViolation",
            Error::Domain(_) => "DomainError",
            Error::Parse { .. } => "ParseError",
            Error::Io { .. } => "IoError",
        }
    }
}
