use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {reason}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}: {bad} of {total} lines malformed (limit {limit:.4}); first bad lines: {lines:?}")]
    TooManyMalformed {
        path: PathBuf,
        bad: usize,
        total: usize,
        limit: f64,
        lines: Vec<usize>,
    },

    #[error("parse error at byte {offset}: {message}")]
    QueryParse { offset: usize, message: String },

    #[error("undefined result: {0}")]
    Undefined(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
