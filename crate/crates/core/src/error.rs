use std::path::PathBuf;

use crate::corpus::InstanceId;

/// Errors raised by ingestion, linkage, evaluation and profiling.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid instance id {value:?}: {field} {reason}")]
    InstanceId {
        value: String,
        field: &'static str,
        reason: &'static str,
    },

    #[error("{file}: row {row}: {message}")]
    Ingest {
        file: String,
        row: u64,
        message: String,
    },

    #[error("instance {instance} assigned to both cluster {first:?} and cluster {second:?}")]
    Partition {
        instance: InstanceId,
        first: String,
        second: String,
    },

    #[error("{count} dangling reference(s) in {what}, first: {first}")]
    Dangling {
        what: &'static str,
        count: usize,
        first: InstanceId,
    },

    #[error("unparseable name {0:?}")]
    UnparseableName(String),

    #[error("nothing to evaluate: {0}")]
    NothingToEvaluate(&'static str),

    #[error("{count} instance(s) missing from the predicted clustering, first: {first}")]
    MissingPredicted { count: usize, first: InstanceId },

    #[error("unknown attribute {0:?} (expected year, gender or ethnicity)")]
    UnknownAttribute(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid synth config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn ingest(file: &str, row: u64, message: impl Into<String>) -> Self {
        Error::Ingest {
            file: file.to_string(),
            row,
            message: message.into(),
        }
    }
}
