use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: `{field}` {reason}")]
    Config { field: &'static str, reason: String },

    #[error("sampling infeasible: cell (y={y}, z={z}) needs {needed} instances but only {available} are available")]
    Infeasible {
        y: u8,
        z: u8,
        needed: usize,
        available: usize,
    },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("stratification failed: {0}")]
    Stratification(String),

    #[error("feature index {index} out of range for dimension {dim}")]
    Dimension { index: usize, dim: usize },

    #[error("`{name}` = {value} outside allowed range [{lo}, {hi}]")]
    Range {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("threshold {epsilon} removed every instance")]
    EmptyFilter { epsilon: f64 },

    #[error("instance {index} has no predicted confounder")]
    MissingPrediction { index: usize },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the error's category.
    ///
    /// 2 configuration, 3 sampling, 4 data, 5 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config { .. } | Error::Range { .. } | Error::Json { .. } => 2,
            Error::Infeasible { .. } => 3,
            Error::Degenerate(_)
            | Error::Stratification(_)
            | Error::Dimension { .. }
            | Error::LengthMismatch { .. }
            | Error::EmptyFilter { .. }
            | Error::MissingPrediction { .. }
            | Error::Parse { .. } => 4,
            Error::Io { .. } | Error::Csv { .. } => 5,
        }
    }
}
