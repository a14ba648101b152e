use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the engine can report. Variant names are stable; the CLI
/// prints them verbatim so callers can match on them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("BadMagic: expected `CMTX`, found {found:?}")]
    BadMagic { found: Vec<u8> },

    #[error("HeaderParse: {0}")]
    HeaderParse(String),

    #[error("LengthMismatch: shape needs {expected} payload bytes, found {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("MixedDimensions: {path} is {found:?}, expected {expected:?}")]
    MixedDimensions {
        path: PathBuf,
        expected: (u32, u32),
        found: (u32, u32),
    },

    #[error("DecodeError: {path}: {message}")]
    DecodeError { path: PathBuf, message: String },

    #[error("EmptyDirectory: no PNG files in {0}")]
    EmptyDirectory(PathBuf),

    #[error("DegenerateSaliency: input {input} has zero total saliency")]
    DegenerateSaliency { input: usize },

    #[error("NegativeSaliency: input {input} has a negative or non-finite entry")]
    NegativeSaliency { input: usize },

    #[error("InvalidGridSide: {0}")]
    InvalidGridSide(usize),

    #[error("NotPSD: compatibility matrix has eigenvalue {min_eigenvalue:e} at omega {omega:e}")]
    NotPsd { min_eigenvalue: f64, omega: f64 },

    #[error("InvalidColumn: {0}")]
    InvalidColumn(String),

    #[error("InvalidLabels: {0}")]
    InvalidLabels(String),

    #[error("InvalidParams: {0}")]
    InvalidParams(String),

    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),

    #[error("IndexOutOfRange: index {index} not below {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("NotSubmodular: pair ({a}, {b}) violates the swap inequality by {excess:e}")]
    NotSubmodular { a: usize, b: usize, excess: f64 },

    #[error("TooLarge: {0}")]
    TooLarge(String),

    #[error("Config: {0}")]
    Config(String),

    #[error("Io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// The bare variant name, e.g. `"DimensionMismatch"`.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::BadMagic { .. } => "BadMagic",
            Error::HeaderParse(_) => "HeaderParse",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::MixedDimensions { .. } => "MixedDimensions",
            Error::DecodeError { .. } => "DecodeError",
            Error::EmptyDirectory(_) => "EmptyDirectory",
            Error::DegenerateSaliency { .. } => "DegenerateSaliency",
            Error::NegativeSaliency { .. } => "NegativeSaliency",
            Error::InvalidGridSide(_) => "InvalidGridSide",
            Error::NotPsd { .. } => "NotPSD",
            Error::InvalidColumn(_) => "InvalidColumn",
            Error::InvalidLabels(_) => "InvalidLabels",
            Error::InvalidParams(_) => "InvalidParams",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::NotSubmodular { .. } => "NotSubmodular",
            Error::TooLarge(_) => "TooLarge",
            Error::Config(_) => "Config",
            Error::Io { .. } => "Io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
