//! KR morphological codes.
//!
//! A KR code is a category head followed by zero or more balanced
//! angle-bracket affix groups, e.g. `NOUN<POSS><CAS<INS>>` or `CONJ`.
//! Groups may nest (`<CAS<INS>>` is one group); nesting depth is unbounded
//! here even though observed codes nest a single level.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MorphCodeError {
    #[error("empty morphological code")]
    Empty,
    #[error("unbalanced brackets in `{0}`")]
    Unbalanced(String),
    #[error("unexpected character `{ch}` after affix group in `{code}`")]
    TrailingChar { code: String, ch: char },
}

/// A parsed KR code: the category head and its affix tags, each tag kept
/// verbatim with its brackets (`<POSS>`, `<CAS<INS>>`).
///
/// Rendering the head followed by the concatenated affixes reproduces the
/// original code string exactly.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MorphCode {
    head: String,
    affixes: Vec<String>,
}

impl MorphCode {
    /// Parse a KR code. The head is the maximal prefix before the first
    /// `<`; the rest must be a sequence of balanced `<…>` groups.
    pub fn parse(code: &str) -> Result<MorphCode, MorphCodeError> {
        if code.is_empty() {
            return Err(MorphCodeError::Empty);
        }
        let head_end = code.find('<').unwrap_or(code.len());
        let head = code[..head_end].to_string();
        let mut affixes = Vec::new();
        let rest = &code[head_end..];
        let mut pos = 0;
        let bytes = rest.as_bytes();
        while pos < bytes.len() {
            if bytes[pos] != b'<' {
                let ch = rest[pos..].chars().next().unwrap();
                return Err(MorphCodeError::TrailingChar {
                    code: code.to_string(),
                    ch,
                });
            }
            let start = pos;
            let mut depth = 0usize;
            loop {
                if pos >= bytes.len() {
                    return Err(MorphCodeError::Unbalanced(code.to_string()));
                }
                match bytes[pos] {
                    b'<' => depth += 1,
                    b'>' => {
                        depth -= 1;
                        if depth == 0 {
                            pos += 1;
                            break;
                        }
                    }
                    _ => {}
                }
                pos += 1;
            }
            affixes.push(rest[start..pos].to_string());
        }
        Ok(MorphCode { head, affixes })
    }

    pub fn head(&self) -> &str {
        &self.head
    }

    /// Affix tags in original order, brackets included.
    pub fn affixes(&self) -> &[String] {
        &self.affixes
    }

    /// Reproduce the original code string.
    pub fn render(&self) -> String {
        let mut s = String::with_capacity(
            self.head.len() + self.affixes.iter().map(String::len).sum::<usize>(),
        );
        s.push_str(&self.head);
        for a in &self.affixes {
            s.push_str(a);
        }
        s
    }
}

/// The name of an affix tag: the text between the opening `<` and the
/// first nested `<` or closing `>`. `<CAS<INS>>` → `CAS`, `<PAST>` → `PAST`.
pub fn affix_name(affix: &str) -> &str {
    let inner = affix.strip_prefix('<').unwrap_or(affix);
    let end = inner.find(['<', '>']).unwrap_or(inner.len());
    &inner[..end]
}
