use std::path::{Path, PathBuf};

use crate::grammar::SourceSpan;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("registry: {0}")]
    Registry(String),
    #[error("cannot lower statement at {span}: {message}")]
    Lower { span: SourceSpan, message: String },
    #[error("{message} at offset {offset}")]
    Deserialize { offset: usize, message: String },
    #[error("{0}")]
    InvalidCode(String),
    #[error("{0}")]
    Metric(String),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("entry {id}: {message}")]
    Entry { id: String, message: String },
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Retrieval(String),
    #[error("{0}")]
    Split(String),
    #[error("{0}")]
    Report(String),
}

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
