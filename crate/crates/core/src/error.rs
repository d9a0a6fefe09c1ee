use std::io;

use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor contents violate an invariant (non-finite values, shape/length mismatch).
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    /// A configuration value is out of its documented range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A magnitude code does not fit the declared bit width.
    #[error("invalid code: {0}")]
    InvalidCode(String),

    /// Operands have incompatible shapes or lengths.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A numerical routine hit a degenerate case (zero mass, no accepted samples).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The energy model cannot price a requested conversion.
    #[error("energy model error: {0}")]
    Model(String),

    /// A conversion log is inconsistent with the mapping or profile it claims to describe.
    #[error("accounting error: {0}")]
    Accounting(String),

    /// Two reports are not comparable.
    #[error("comparison error: {0}")]
    Compare(String),

    /// A file does not conform to its declared format.
    #[error("format error: {0}")]
    Format(String),

    /// The input uses a feature this tool deliberately does not handle.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An experiment config is missing keys, has unknown keys, or fails validation.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
