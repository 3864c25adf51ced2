//! Error taxonomy shared by every module.
//!
//! Structural errors (shapes, domains, configuration) are reported before any
//! numeric work starts; numeric and statistical errors carry enough context to
//! identify the failing quantity.

use thiserror::Error;

/// Unified error type for the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A system description violated one of its documented constraints.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Matrix or vector dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An argument lies outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numeric routine failed (non-positive pivot, no convergence, ...).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// An estimator cannot produce a meaningful value from the given data.
    #[error("statistical failure: {0}")]
    Statistical(String),

    /// A chart or table references a column the data set does not carry.
    #[error("missing column '{column}' in {source_name}")]
    MissingColumn { column: String, source_name: String },

    /// A run description file could not be parsed.
    #[error("config parse failure: {0}")]
    Parse(String),

    /// Filesystem trouble while reading inputs or writing outputs.
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code the command line tool maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Shape(_)
            | Error::InvalidArgument(_)
            | Error::Parse(_)
            | Error::MissingColumn { .. } => 2,
            Error::Io(_) => 3,
            Error::Numeric(_) | Error::Statistical(_) => 1,
        }
    }
}
