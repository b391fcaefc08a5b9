use std::fmt;
use std::path::Path;

use fragrag_chem::corpus::CorpusError;
use fragrag_core::CoreError;
use fragrag_lm::LmError;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration (exit 1).
    Usage(String),
    /// Unreadable, malformed or inconsistent input data (exit 2).
    Data(String),
    /// A broken internal invariant (exit 3).
    Internal(String),
    /// Stopped by SIGINT after writing partial results (exit 130).
    Interrupted,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
            CliError::Interrupted => 130,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }

    pub fn corpus(path: &Path, e: CorpusError) -> Self {
        match e {
            CorpusError::Io(e) => CliError::io(path, e),
            CorpusError::Line { line, message } => {
                CliError::Data(format!("{}:{line}: {message}", path.display()))
            }
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
            CliError::Interrupted => write!(f, "interrupted; partial results written"),
        }
    }
}

impl From<LmError> for CliError {
    fn from(e: LmError) -> Self {
        match e {
            LmError::Shape(_) => CliError::Internal(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(m) => CliError::Usage(m),
            CoreError::Lm(e) => e.into(),
            CoreError::EmptyPopulation | CoreError::BudgetExhausted => CliError::Internal(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
