use std::io;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("corpus line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("malformed tag sequence: illegal transition {0}")]
    MalformedTags(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("training diverged: {0}")]
    NonFinite(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("evaluation input: {0}")]
    EvalInput(String),
}

impl Error {
    pub fn schema(line: usize, message: impl Into<String>) -> Self {
        Error::Schema {
            line,
            message: message.into(),
        }
    }

    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
