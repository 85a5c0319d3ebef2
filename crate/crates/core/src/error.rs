use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("need at least {needed} {what}, got {got}")]
    Insufficient {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("samples have zero variance; cannot standardize")]
    ZeroVariance,

    #[error("oracle input has {got} points, limit is {limit}")]
    OracleTooLarge { got: usize, limit: usize },

    #[error("expected point count {expected:.0} exceeds cap {cap:.0} (raise max_expected_points to override)")]
    ResourceLimit { expected: f64, cap: f64 },

    #[error("oracle mismatch in replication {rep_id}: {detail}")]
    OracleMismatch { rep_id: u64, detail: String },

    #[error("oracle cross-checks need the `oracle` feature")]
    OracleUnavailable,

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn io_path(action: &str, path: &std::path::Path, source: std::io::Error) -> Self {
        Error::io(
            format!("{action} {}", PathBuf::from(path).display()),
            source,
        )
    }
}
