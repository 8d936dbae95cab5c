use std::io;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),
    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("root finder did not converge after {0} iterations")]
    RootNotFound(usize),
    #[error("kurtosis undefined: zero variance")]
    ZeroVariance,
    #[error("not enough samples: need {need}, have {have}")]
    TooFewSamples { need: u64, have: u64 },
    #[error("numerical instability: {0}")]
    NumericalInstability(String),
    #[error("capacity search exhausted {0} rounds")]
    RoundsExhausted(usize),
    #[error("bad file format: {0}")]
    Format(String),
    #[error("truncated file: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
