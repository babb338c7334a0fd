use std::collections::HashMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const E1_START: &str = "e11";
pub const E1_END: &str = "e12";
pub const E2_START: &str = "e21";
pub const E2_END: &str = "e22";
pub const INDICATOR_START: &str = "#";
pub const INDICATOR_END: &str = "$";

pub const RESERVED: [&str; 10] = [
    CLS,
    SEP,
    PAD,
    UNK,
    E1_START,
    E1_END,
    E2_START,
    E2_END,
    INDICATOR_START,
    INDICATOR_END,
];

pub fn is_reserved(token: &str) -> bool {
    RESERVED.contains(&token)
}

/// Subword vocabulary; the id of a token is its line number in the file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    /// Reserved tokens appended because the source lacked them.
    appended: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from tokens in id order. Missing reserved tokens
    /// are appended; duplicates keep their first id.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocabulary {
            tokens: Vec::new(),
            index: HashMap::new(),
            appended: 0,
        };
        for t in tokens {
            v.push(t.into());
        }
        for r in RESERVED {
            if !v.index.contains_key(r) {
                v.push(r.to_string());
                v.appended += 1;
            }
        }
        v
    }

    fn push(&mut self, token: String) {
        let id = self.tokens.len() as u32;
        self.index.entry(token.clone()).or_insert(id);
        self.tokens.push(token);
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_tokens(
            content.lines().map(|l| l.trim_end_matches('\r').to_string()),
        ))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut body = self.tokens.join("\n");
        body.push('\n');
        std::fs::write(path, body).map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of reserved tokens that were appended to the source list.
    pub fn appended_reserved(&self) -> usize {
        self.appended
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Id of a reserved token. Always present by construction.
    pub fn reserved(&self, token: &str) -> u32 {
        debug_assert!(is_reserved(token));
        self.index[token]
    }

    pub fn cls(&self) -> u32 {
        self.reserved(CLS)
    }

    pub fn sep(&self) -> u32 {
        self.reserved(SEP)
    }

    pub fn pad(&self) -> u32 {
        self.reserved(PAD)
    }

    pub fn unk(&self) -> u32 {
        self.reserved(UNK)
    }

    /// Ids for `tokens`, `[UNK]` for anything not in the vocabulary.
    pub fn ids<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens
            .iter()
            .map(|t| self.id(t.as_ref()).unwrap_or_else(|| self.unk()))
            .collect()
    }

    pub fn decode(&self, ids: &[u32]) -> Vec<&str> {
        ids.iter().map(|&i| self.token(i).unwrap_or(UNK)).collect()
    }

    /// SHA-256 over the newline-joined token list, hex encoded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
