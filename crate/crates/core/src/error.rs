use thiserror::Error;

/// Errors raised by a reader, either in-process or behind the HTTP protocol.
#[derive(Debug, Error)]
pub enum ReaderError {
    #[error("reader transport failure at {endpoint}: {message}")]
    Transport { endpoint: String, message: String },
    #[error("malformed reader response: {0}")]
    Malformed(String),
    #[error("reader dimension mismatch: expected d={expected}, got d={actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid reader input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("duplicate document id `{0}`")]
    DuplicateDocument(String),
    #[error("duplicate passage id `{0}`")]
    DuplicatePassage(String),
    #[error("document `{0}` has no text")]
    EmptyDocument(String),
    #[error("unknown passage id `{0}`")]
    UnknownPassage(String),
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid span [{start}, {end}] for sequence of length {len}")]
    Span { start: i64, end: i64, len: usize },
    #[error("null answer cannot be featurized (passage `{0}`)")]
    NullAnswer(String),
    #[error("subject `{subject}` does not occur in question `{question}`")]
    SubjectNotFound { question: String, subject: String },
    #[error("invalid table: {0}")]
    Table(String),
    #[error("{0}")]
    Invalid(String),
    #[error("reader failed on question `{question}` / passage `{passage_id}`: {source}")]
    Reader {
        question: String,
        passage_id: String,
        #[source]
        source: ReaderError,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("unsupported file format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than by a runtime failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Reader { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
