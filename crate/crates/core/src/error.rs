use fragrag_chem::ChemError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("no fragment survived vocabulary filtering")]
    EmptyVocabulary,
    #[error("{0} pool is empty")]
    EmptyPool(&'static str),
    #[error("population is empty")]
    EmptyPopulation,
    #[error("oracle budget exhausted")]
    BudgetExhausted,
    #[error("history is empty")]
    EmptyHistory,
    #[error("need at least {needed} molecules, got {got}")]
    TooFewMolecules { needed: usize, got: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error("vocabulary dump line {line}: {message}")]
    Dump { line: usize, message: String },
    #[error(transparent)]
    Chem(#[from] ChemError),
    #[error(transparent)]
    Lm(#[from] fragrag_lm::LmError),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
