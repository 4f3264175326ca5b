use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, FcwError>;

/// A single broken invariant, located by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum FcwError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("episode `{id}` is invalid: {}", join_violations(.violations))]
    Validation {
        id: String,
        violations: Vec<Violation>,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("rate undefined: no {0} episodes in the evaluated set")]
    UndefinedRate(&'static str),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl FcwError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FcwError::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        FcwError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
