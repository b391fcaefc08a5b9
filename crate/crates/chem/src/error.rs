use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChemError {
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("valence error on atom {atom} ({symbol}): total valence {valence} not allowed")]
    Valence {
        atom: usize,
        symbol: String,
        valence: u32,
    },
    #[error("invalid graph: {0}")]
    Structure(String),
    #[error("attachment mismatch: {0}")]
    AttachmentMismatch(String),
    #[error("pool of {available} candidates is smaller than k = {needed}")]
    PoolTooSmall { needed: usize, available: usize },
}

impl ChemError {
    pub(crate) fn parse(position: usize, message: impl Into<String>) -> Self {
        ChemError::Parse {
            position,
            message: message.into(),
        }
    }
}

pub type Result<T, E = ChemError> = std::result::Result<T, E>;
