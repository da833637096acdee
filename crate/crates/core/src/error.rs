use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch, {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("{op}: {msg}")]
    BadInput { op: &'static str, msg: String },

    #[error("{op}: produced a non-finite value")]
    NonFinite { op: &'static str },

    #[error("unknown parameter `{0}`")]
    UnknownParam(String),

    #[error("unknown token `{0}`")]
    UnknownToken(String),

    #[error("vocabulary: {0}")]
    Vocab(String),

    #[error("prompt: {0}")]
    Prompt(String),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub fn bad_input(op: &'static str, msg: impl Into<String>) -> Self {
        Error::BadInput {
            op,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
