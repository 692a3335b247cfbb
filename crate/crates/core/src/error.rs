use thiserror::Error;

/// Errors produced by the library. Every variant maps to a usage error
/// (exit code 2) at the command line.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid code parameters: {0}")]
    InvalidParams(String),

    #[error("row {row} of the allocation matrix is empty")]
    EmptyRow { row: usize },

    #[error("row {row} has even weight {weight}; an odd row weight is required")]
    EvenRowWeight { row: usize, weight: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("n = {n} exceeds the enumeration limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("byzantine index {index} out of range for n = {n}")]
    ByzantineOutOfRange { index: usize, n: usize },

    #[error("oracle-reverse attack needs the true gradient sign")]
    MissingTrueSign,

    #[error("true gradient is zero; sign error is undefined")]
    ZeroGradient,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
