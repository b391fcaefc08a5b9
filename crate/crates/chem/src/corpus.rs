//! Molecule corpus files: one `SMILES<TAB>property` record per line, property
//! in `[0, 1]`; blank lines and lines starting with `#` are skipped.

use std::fmt;
use std::path::Path;

use crate::error::ChemError;
use crate::graph::MolGraph;
use crate::smiles::parse_smiles;

#[derive(Debug, Clone)]
pub struct CorpusRecord {
    pub line: usize,
    pub smiles: String,
    pub graph: MolGraph,
    pub property: f64,
}

#[derive(Debug)]
pub enum CorpusError {
    Io(std::io::Error),
    Line { line: usize, message: String },
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusError::Io(e) => write!(f, "{e}"),
            CorpusError::Line { line, message } => write!(f, "line {line}: {message}"),
        }
    }
}

impl std::error::Error for CorpusError {}

impl From<std::io::Error> for CorpusError {
    fn from(e: std::io::Error) -> Self {
        CorpusError::Io(e)
    }
}

fn line_error(line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Line {
        line,
        message: message.into(),
    }
}

/// Parses one record; `Ok(None)` for comments and blank lines. Records may be
/// tab- or whitespace-separated; a missing property defaults to 0.
pub fn parse_line(line_no: usize, line: &str) -> Result<Option<CorpusRecord>, CorpusError> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let mut parts = trimmed.split(|c: char| c == '\t' || c.is_whitespace()).filter(|s| !s.is_empty());
    let smiles = parts.next().unwrap_or_default().to_string();
    let property = match parts.next() {
        Some(p) => p
            .parse::<f64>()
            .map_err(|_| line_error(line_no, format!("bad property value '{p}'")))?,
        None => 0.0,
    };
    if !(0.0..=1.0).contains(&property) {
        return Err(line_error(line_no, format!("property {property} outside [0, 1]")));
    }
    let graph = parse_smiles(&smiles).map_err(|e: ChemError| line_error(line_no, e.to_string()))?;
    Ok(Some(CorpusRecord {
        line: line_no,
        smiles,
        graph,
        property,
    }))
}

pub fn parse_corpus(text: &str) -> Result<Vec<CorpusRecord>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(r) = parse_line(i + 1, line)? {
            out.push(r);
        }
    }
    Ok(out)
}

pub fn read_corpus(path: &Path) -> Result<Vec<CorpusRecord>, CorpusError> {
    parse_corpus(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_records() {
        let text = "# header\nCCO\t0.5\n\nc1ccccc1\t1\n";
        let recs = parse_corpus(text).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].line, 2);
        assert_eq!(recs[1].property, 1.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_corpus("CCO\t0.5\nC1CC\t0.1\n") {
            Err(CorpusError::Line { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_corpus("CCO\t1.5\n").is_err());
    }
}
