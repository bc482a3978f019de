use std::path::PathBuf;

use thiserror::Error;

use crate::graph::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range input to an operation.
    #[error("input error: {0}")]
    Input(String),

    #[error("node {node} out of range (network has {count} nodes)")]
    NodeOutOfRange { node: NodeId, count: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// Exhaustive search refused because the instance exceeds the cap.
    #[error("instance too large for exhaustive search: {size} > cap {cap}")]
    TooLarge { size: usize, cap: usize },

    /// A filtering rule was applied to inputs it is not defined on.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A node did not receive what the protocol requires.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("precondition violated: node {witness} is not reachable from the source set")]
    Unreachable { witness: NodeId },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(path: &str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
