use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parameter mismatch: `{field}` differs")]
    ParameterMismatch { field: &'static str },

    #[error("capacity exceeded: the declared stream bound of {n_max} bytes is already reached")]
    CapacityExceeded { n_max: u64 },

    #[error("sketch is not resumable")]
    NonResumable,

    #[error("no precomputed power for window length {0}")]
    MissingPower(u64),

    #[error("BWT position {0} holds the sentinel")]
    SentinelPosition(u64),

    #[error("position {pos} is outside 1..={len}")]
    OutOfRange { pos: u64, len: u64 },

    #[error("bookmark for k={k} must be initialized at BWT length {expected}, found {actual}")]
    WrongPhase { k: u64, expected: u64, actual: u64 },

    #[error("malformed sketch: {0}")]
    Format(String),

    #[error("zero denominator: both inputs are empty")]
    ZeroDenominator,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
