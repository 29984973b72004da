use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("state is not positive semidefinite (clipped weight {0:.3e})")]
    NotPositive(f64),

    #[error("trace is not normalized (trace {0})")]
    NotNormalized(f64),

    #[error("trace vanishes ({0:.3e})")]
    ZeroTrace(f64),

    #[error("grids or domains do not match")]
    GridMismatch,

    #[error("operation expects a {expected}-domain state")]
    WrongDomain { expected: &'static str },

    #[error("grid too short: {0}")]
    GridTooShort(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("read-in and read-out windows overlap: {0}")]
    OverlappingWindows(String),

    #[error("frequency shift {shift} rad/ns exceeds the Nyquist limit {limit} rad/ns")]
    NyquistExceeded { shift: f64, limit: f64 },

    #[error("Green operator is not passive (largest singular value {0})")]
    NotPassive(f64),

    #[error("ensemble member {index}: {source}")]
    Ensemble {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("container format: {0}")]
    Format(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error in {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("scenario {scenario}: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
