use thiserror::Error;

/// Errors raised by code construction, decoding and the training/harness layers.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("block length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("reliability order is not a permutation of 0..{0}")]
    NotAPermutation(usize),

    #[error("requested {requested} non-frozen bits but block length is {block}")]
    TooManyInfoBits { requested: usize, block: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("frozen position {0} carries a nonzero bit")]
    NonzeroFrozenBit(usize),

    #[error("invalid CRC parameters: {0}")]
    InvalidCrc(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("constraint index {0} is not an information position")]
    ConstraintNotInfo(usize),

    #[error("invalid constraints: {0}")]
    InvalidConstraints(String),

    #[error("correlation matrix: {0}")]
    InvalidMatrix(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
