use std::path::PathBuf;

use crate::graph::{NodeId, NodeLabel};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown node label `{0}`")]
    UnknownLabel(String),

    #[error("unknown edge label `{0}`")]
    UnknownEdgeLabel(String),

    #[error("edge `{label}` does not accept {from} -> {to}")]
    EndpointMismatch {
        label: String,
        from: NodeLabel,
        to: NodeLabel,
    },

    #[error("edge endpoint {0} does not exist")]
    DanglingEndpoint(NodeId),

    #[error("node {0} does not exist")]
    MissingNode(NodeId),

    #[error("invalid property `{key}`: {reason}")]
    InvalidProperty { key: String, reason: String },

    #[error("corrupt event log at seq {seq} (line {line}): {reason}")]
    CorruptLog { seq: u64, line: usize, reason: String },

    #[error("corrupt snapshot {path}: {reason}")]
    CorruptSnapshot { path: PathBuf, reason: String },

    #[error("store at {0} is locked by another writer")]
    StoreLocked(PathBuf),

    #[error("store is read-only")]
    ReadOnly,

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("{0} not found")]
    NotFound(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("undefined input: {0}")]
    UndefinedInput(String),

    #[error("source unreachable: {0}")]
    Unreachable(String),

    #[error("malformed content: {0}")]
    Malformed(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unauthorized: {0}")]
    Unauthorized(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by the caller's input rather than by the system.
    pub fn is_user_error(&self) -> bool {
        !matches!(
            self,
            Error::Io(_)
                | Error::Json(_)
                | Error::CorruptLog { .. }
                | Error::CorruptSnapshot { .. }
        )
    }
}
