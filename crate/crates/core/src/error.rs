use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sample stream out of order: t={t_ms} ms after {prev_ms} ms")]
    NonMonotonicTimestamps { prev_ms: f64, t_ms: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("insufficient baseline: {0}")]
    InsufficientBaseline(String),

    #[error("invalid questionnaire: {0}")]
    InvalidQuestionnaire(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("log parse error at line {line}: {message}")]
    LogParse { line: usize, message: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
