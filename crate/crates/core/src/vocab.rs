//! Token vocabulary: a bijection between token strings and dense ids.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use sha2::{Digest, Sha256};

/// Dense token identifier. `u32` is sufficient for gigaword vocabularies.
pub type TokenId = u32;

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

/// Reserved ids are fixed and never remapped.
pub const UNK_ID: TokenId = 0;
pub const BOS_ID: TokenId = 1;
pub const EOS_ID: TokenId = 2;

/// Bidirectional token ↔ id mapping with the three reserved entries
/// (`<unk>`, `<s>`, `</s>`) pre-assigned to ids 0, 1, 2.
///
/// Ids are assigned in insertion order, so a vocabulary built from a
/// deterministic token stream is itself deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    id_of: HashMap<String, TokenId>,
    tokens: Vec<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        let mut v = Vocabulary {
            id_of: HashMap::new(),
            tokens: Vec::new(),
        };
        for tok in [UNK, BOS, EOS] {
            v.tokens.push(tok.to_string());
            v.id_of.insert(tok.to_string(), (v.tokens.len() - 1) as TokenId);
        }
        v
    }

    /// Number of entries, reserved tokens included.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false // reserved entries are always present
    }

    /// Number of predictable events: every entry except `<s>`, which is
    /// only ever a context.
    pub fn event_count(&self) -> usize {
        self.tokens.len() - 1
    }

    /// Id of `tok`, inserting it if absent.
    pub fn intern(&mut self, tok: &str) -> TokenId {
        if let Some(&id) = self.id_of.get(tok) {
            return id;
        }
        let id = self.tokens.len() as TokenId;
        self.tokens.push(tok.to_string());
        self.id_of.insert(tok.to_string(), id);
        id
    }

    pub fn id(&self, tok: &str) -> Option<TokenId> {
        self.id_of.get(tok).copied()
    }

    /// Id of `tok`, falling back to `<unk>` for out-of-vocabulary tokens.
    pub fn id_or_unk(&self, tok: &str) -> TokenId {
        self.id(tok).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(|s| s.as_str())
    }

    /// Encode a text sentence, mapping out-of-vocabulary tokens to `<unk>`.
    pub fn encode(&self, sentence: &[String]) -> Vec<TokenId> {
        sentence.iter().map(|t| self.id_or_unk(t)).collect()
    }

    /// 64-bit digest of the token list, used to detect mismatched
    /// vocabularies when merging count files.
    pub fn hash64(&self) -> u64 {
        let mut h = Sha256::new();
        for tok in &self.tokens {
            h.update(tok.as_bytes());
            h.update([0u8]);
        }
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }

    /// Write one token per line; the line number (from 0) is the id.
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        for tok in &self.tokens {
            writeln!(w, "{tok}")?;
        }
        Ok(())
    }

    /// Read a vocabulary written by [`Vocabulary::write_to`]. The first
    /// three lines must be the reserved tokens in id order.
    pub fn read_from<R: BufRead>(r: R) -> io::Result<Self> {
        let mut v = Vocabulary::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if i < 3 {
                if line != v.tokens[i] {
                    return Err(io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("vocabulary line {i} must be `{}`, got `{line}`", v.tokens[i]),
                    ));
                }
                continue;
            }
            if v.id_of.contains_key(&line) {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("duplicate vocabulary entry `{line}` at line {i}"),
                ));
            }
            v.intern(&line);
        }
        Ok(v)
    }

    /// Iterate over `(id, token)` pairs in id order.
    pub fn iter(&self) -> impl Iterator<Item = (TokenId, &str)> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (i as TokenId, t.as_str()))
    }
}
