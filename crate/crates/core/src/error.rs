use std::path::PathBuf;

use crate::idspace::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {left}-bit id vs {right}-bit id")]
    Dimension { left: usize, right: usize },

    #[error("id length must be in 1..={max}, got {got}")]
    BadLength { got: usize, max: usize },

    #[error("bucket index is undefined for identical ids")]
    UndefinedBucket,

    #[error("id set is empty")]
    EmptyIdSet,

    #[error("duplicate id {0}")]
    Duplicate(NodeId),

    #[error("subtree is empty or does not belong to this trie")]
    EmptySubtree,

    #[error("id {0} is not a leaf of the trie")]
    MissingLeaf(NodeId),

    #[error("id {0} is not a node of the network")]
    MissingNode(NodeId),

    #[error("{what} must be positive")]
    Domain { what: &'static str },

    #[error("cannot draw {n} distinct {d}-bit ids")]
    Capacity { n: u64, d: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("enumeration needs {needed} bucket combinations (limit {limit})")]
    Infeasible { needed: u128, limit: u128 },

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
