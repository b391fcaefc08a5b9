//! Run manifest: everything needed to replay and evaluate a run.

use std::path::{Path, PathBuf};

use fragrag_core::config::Config;
use fragrag_core::optimizer::HistoryEntry;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const VOCAB_FILE: &str = "vocab.tsv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub path: PathBuf,
    pub sha256: String,
    /// Records used after applying `[data] limit`.
    pub records: usize,
    /// Records dropped because they match the oracle target.
    pub held_out: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub run_id: String,
    /// False when the run was interrupted before the budget was spent.
    pub complete: bool,
    /// True when the loop stopped producing new molecules.
    pub stalled: bool,
    pub seed: u64,
    pub config: Config,
    pub dataset: DatasetInfo,
    pub backbone: Option<FileDigest>,
    pub injection: Option<FileDigest>,
    pub oracle_calls: usize,
    pub history_csv: String,
    pub vocabulary: String,
    pub history: Vec<HistoryEntry>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serialises");
        s.push('\n');
        s
    }

    /// Parses a manifest, rejecting other schema versions before looking at
    /// the rest of the document.
    pub fn parse(text: &str) -> CliResult<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Data(format!("manifest: {e}")))?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => {
                return Err(CliError::Data(format!(
                    "manifest schema version {v}, expected {SCHEMA_VERSION}"
                )))
            }
            None => return Err(CliError::Data("manifest has no schema_version".into())),
        }
        serde_json::from_value(value).map_err(|e| CliError::Data(format!("manifest: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Manifest::parse(&text)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> CliResult<FileDigest> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(FileDigest {
        path: path.to_path_buf(),
        sha256: sha256_hex(&bytes),
    })
}
