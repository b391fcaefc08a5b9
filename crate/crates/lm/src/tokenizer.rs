//! SAFE/SMILES tokenizer.
//!
//! Tokens: bracket atoms (`[nH]`, `[*]`, ...), two-letter halogens, organic
//! atoms, bond symbols, parentheses, ring digits, `%NN` labels and `.`.
//! Ids 0–2 are PAD, BOS and EOS.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{LmError, Result};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;

const SPECIALS: [&str; 3] = ["<pad>", "<bos>", "<eos>"];

const BASE: &[&str] = &[
    "B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I", "b", "c", "n", "o", "p", "s", "-", "=", "#",
    ":", "(", ")", "1", "2", "3", "4", "5", "6", "7", "8", "9", ".", "[*]", "%10", "%11", "%12",
    "%13",
];

/// Splits `text` into token strings.
pub fn split_tokens(text: &str) -> Result<Vec<&str>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let fail = |i: usize| LmError::Tokenize {
        text: text.to_string(),
        position: i,
    };
    while i < bytes.len() {
        let len = match bytes[i] {
            b'[' => match bytes[i..].iter().position(|&b| b == b']') {
                Some(end) => end + 1,
                None => return Err(fail(i)),
            },
            b'%' => {
                if i + 2 < bytes.len() && bytes[i + 1].is_ascii_digit() && bytes[i + 2].is_ascii_digit() {
                    3
                } else {
                    return Err(fail(i));
                }
            }
            b'C' if bytes.get(i + 1) == Some(&b'l') => 2,
            b'B' if bytes.get(i + 1) == Some(&b'r') => 2,
            b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I' | b'b' | b'c' | b'n' | b'o'
            | b'p' | b's' | b'-' | b'=' | b'#' | b':' | b'(' | b')' | b'.' => 1,
            b'1'..=b'9' => 1,
            _ => return Err(fail(i)),
        };
        out.push(&text[i..i + len]);
        i += len;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenVocab {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl TokenVocab {
    fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        TokenVocab { tokens, index }
    }

    pub fn base() -> Self {
        Self::from_tokens(SPECIALS.iter().chain(BASE).map(|s| s.to_string()).collect())
    }

    /// Base vocabulary plus any further tokens found in `texts`, sorted.
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let base = Self::base();
        let mut extra = std::collections::BTreeSet::new();
        for t in texts {
            for tok in split_tokens(t)? {
                if !base.index.contains_key(tok) {
                    extra.insert(tok.to_string());
                }
            }
        }
        let mut tokens = base.tokens;
        tokens.extend(extra);
        Ok(Self::from_tokens(tokens))
    }

    /// Restores the lookup table after deserialisation.
    pub fn rebuild(tokens: Vec<String>) -> Self {
        Self::from_tokens(tokens)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn encode(&self, text: &str) -> Result<Vec<u32>> {
        split_tokens(text)?
            .into_iter()
            .map(|t| self.id(t).ok_or_else(|| LmError::UnknownToken(t.to_string())))
            .collect()
    }

    /// Concatenates token strings, skipping PAD/BOS/EOS.
    pub fn decode(&self, ids: &[u32]) -> String {
        ids.iter()
            .filter(|&&i| i > EOS)
            .map(|&i| self.token(i))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn splits_safe_text() {
        let toks = split_tokens("c1cc[nH]c1-%10.Cl%10%11.O%11").unwrap();
        assert_eq!(
            toks,
            ["c", "1", "c", "c", "[nH]", "c", "1", "-", "%10", ".", "Cl", "%10", "%11", ".", "O", "%11"]
        );
        assert!(split_tokens("C%1").is_err());
        assert!(split_tokens("C[NH").is_err());
        assert!(split_tokens("Cx").is_err());
    }

    #[test]
    fn vocabulary_grows_from_texts() {
        let v = TokenVocab::from_texts(["C[NH3+]", "CC(=O)[O-]"]).unwrap();
        assert!(v.id("[NH3+]").is_some());
        assert!(v.id("[O-]").is_some());
        assert_eq!(v.id("<bos>"), Some(BOS));
        assert!(matches!(
            TokenVocab::base().encode("[Si]"),
            Err(LmError::UnknownToken(_))
        ));
    }

    proptest! {
        #[test]
        fn encode_decode_round_trips(parts in proptest::collection::vec(prop::sample::select(BASE.to_vec()), 0..40)) {
            let text: String = parts.concat();
            let v = TokenVocab::base();
            let ids = v.encode(&text).unwrap();
            prop_assert_eq!(v.decode(&ids), text);
        }
    }
}
