use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure class; the CLI maps these onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Crypto,
    Resource,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("polynomial domain mismatch: expected {expected}, found {found}")]
    Domain {
        expected: &'static str,
        found: &'static str,
    },
    #[error("operands were built under different parameters")]
    ParamsMismatch,
    #[error("limb count mismatch: {0} vs {1}")]
    LimbMismatch(usize, usize),
    #[error("cannot drop a limb from a single-limb polynomial")]
    BottomLevel,
    #[error("parameters carry no NTT tables")]
    MissingNttTables,
    #[error("level mismatch: {0} vs {1}")]
    LevelMismatch(usize, usize),
    #[error("scale mismatch: {0} vs {1}")]
    ScaleMismatch(f64, f64),
    #[error("target level {target} is above current level {current}")]
    LevelTooHigh { target: usize, current: usize },
    #[error("{got} values do not fit into {slots} slots")]
    TooManyValues { got: usize, slots: usize },
    #[error("non-finite input value at index {0}")]
    NonFinite(usize),
    #[error("relinearization key required")]
    MissingRelinKey,
    #[error("ciphertext has {0} parts; relinearize before decrypting")]
    UnrelinearizedCiphertext(usize),
    #[error("parameter hash mismatch")]
    ParamsHashMismatch,
    #[error("multiplicative depth exceeded at layer {layer}: needs {needed} levels, {available} available")]
    DepthOverflow {
        layer: usize,
        needed: usize,
        available: usize,
    },
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("malformed blob: {0}")]
    Format(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidParams(_)
            | Error::Domain { .. }
            | Error::ParamsMismatch
            | Error::LimbMismatch(..)
            | Error::BottomLevel
            | Error::MissingNttTables
            | Error::LevelMismatch(..)
            | Error::ScaleMismatch(..)
            | Error::LevelTooHigh { .. }
            | Error::MissingRelinKey
            | Error::UnrelinearizedCiphertext(_)
            | Error::ParamsHashMismatch
            | Error::Format(_) => ErrorCategory::Crypto,
            Error::DepthOverflow { .. } | Error::Resource(_) | Error::Io(_) => ErrorCategory::Resource,
            Error::TooManyValues { .. }
            | Error::NonFinite(_)
            | Error::InvalidModel(_)
            | Error::Shape(_)
            | Error::Config(_)
            | Error::Degenerate(_)
            | Error::Json(_) => ErrorCategory::Validation,
        }
    }
}
