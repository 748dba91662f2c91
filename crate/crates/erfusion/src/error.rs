use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A malformed line in a line-oriented input file.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// An invariant violation inside an otherwise well-formed document.
    #[error("doc {doc_id}, sentence {sentence}: {msg}")]
    Document {
        doc_id: String,
        sentence: usize,
        msg: String,
    },

    #[error("invalid parameter: {0}")]
    Param(String),

    /// A missing or corrupt index file.
    #[error("index file {file}: {msg}")]
    Index { file: String, msg: String },

    #[error("index version mismatch: found {found}, expected {expected}")]
    Version { found: u32, expected: u32 },

    #[error("evaluation error: {0}")]
    Eval(String),
}

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub fn document(doc_id: impl Into<String>, sentence: usize, msg: impl Into<String>) -> Self {
        Error::Document {
            doc_id: doc_id.into(),
            sentence,
            msg: msg.into(),
        }
    }

    pub fn index(file: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Index {
            file: file.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
