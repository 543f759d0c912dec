//! Crate-wide error type.
//!
//! Errors are split into two families so callers (the CLI in particular) can
//! distinguish bad input from failed computation: [`IrisError::is_validation`]
//! drives the process exit code.

use std::path::PathBuf;

/// Any error produced by this crate.
#[derive(Debug, thiserror::Error)]
pub enum IrisError {
    // --- validation family -------------------------------------------------
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("unknown occupation '{given}' (closest registry name: '{closest}')")]
    UnknownOccupation { given: String, closest: String },

    #[error("invalid {field} value '{value}': {reason}")]
    InvalidValue {
        field: &'static str,
        value: String,
        reason: String,
    },

    #[error("{context}: distribution sums to {sum:.6}, outside tolerance {tolerance} of 1")]
    DistributionSum {
        context: String,
        sum: f64,
        tolerance: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    // --- computation family ------------------------------------------------
    #[error("empty group: no records for {context}")]
    EmptyGroup { context: String },

    #[error("need at least {needed} {what}, got {got}")]
    Insufficient {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("probability vector label mismatch: {0}")]
    LabelMismatch(String),

    #[error("metric '{metric}' value {value} outside its declared domain ({domain})")]
    OutOfDomain {
        metric: String,
        value: f64,
        domain: String,
    },

    #[error("dimension {0} is missing and no substitution policy applies")]
    MissingDimension(String),

    #[error("degenerate statistic: {0}")]
    Degenerate(String),
}

impl IrisError {
    /// True for errors caused by invalid input rather than failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            IrisError::Parse { .. }
                | IrisError::UnknownOccupation { .. }
                | IrisError::InvalidValue { .. }
                | IrisError::DistributionSum { .. }
                | IrisError::Config(_)
                | IrisError::Io { .. }
        )
    }

    /// A parse/validation error anchored to a file and line.
    pub fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        IrisError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, IrisError>;
