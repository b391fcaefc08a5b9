use thiserror::Error;

#[derive(Debug, Error)]
pub enum LmError {
    #[error("cannot tokenize {text:?} at byte {position}")]
    Tokenize { text: String, position: usize },
    #[error("unknown token {0:?}")]
    UnknownToken(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("sequence of {len} tokens exceeds context {context}")]
    TooLong { len: usize, context: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("no training examples: {0}")]
    NoData(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Chem(#[from] fragrag_chem::ChemError),
}

pub type Result<T, E = LmError> = std::result::Result<T, E>;
