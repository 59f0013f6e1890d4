use thiserror::Error;

/// Failure category, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing configuration key {0}")]
    MissingKey(String),
    #[error("unknown configuration key {0}")]
    UnknownKey(String),
    #[error("configuration key {key} given twice (as {first} and {second})")]
    ConflictingKeys {
        key: String,
        first: String,
        second: String,
    },
    #[error("invalid value for {key}: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("non-positive {quantity} {field}")]
    NonPositive {
        quantity: &'static str,
        field: &'static str,
    },
    #[error("negative {quantity} {field}")]
    Negative {
        quantity: &'static str,
        field: &'static str,
    },
    #[error("non-finite value for {0}")]
    NonFinite(&'static str),
    #[error("{0}")]
    Invalid(String),
    #[error("configuration parse error: {0}")]
    Parse(String),
    #[error("no physical steady state: {0}")]
    NoPhysicalRoot(String),
    #[error("steady-state residual {residual:e} exceeds {tolerance:e} in {equation}")]
    ResidualBreach {
        equation: &'static str,
        residual: f64,
        tolerance: f64,
    },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("sweep curve at secondary value {value} failed: {source}")]
    Curve {
        value: f64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NoPhysicalRoot(_)
            | Error::ResidualBreach { .. }
            | Error::Singular(_)
            | Error::NoConvergence(_) => ErrorKind::Numerical,
            Error::Io(_) => ErrorKind::Io,
            Error::Curve { source, .. } => source.kind(),
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
