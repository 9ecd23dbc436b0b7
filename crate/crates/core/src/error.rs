use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not a git repository: {}", .0.display())]
    NotARepository(PathBuf),

    #[error("unknown branch(es): {}", .0.join(", "))]
    UnknownBranch(Vec<String>),

    #[error("corrupt or undecodable object: {0}")]
    CorruptObject(String),

    #[error("path `{path}` not found in tree of commit {commit}")]
    FileNotInTree { commit: String, path: String },

    #[error("cannot register an empty entity")]
    EmptyEntity,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Git(#[from] git2::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    /// Whether this error stems from a bad configuration rather than from the
    /// repository or the filesystem.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::InvalidConfig(_))
    }
}
