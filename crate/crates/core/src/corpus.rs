//! Corpus data model and streaming readers.
//!
//! Two on-disk formats:
//!
//! * **Annotated TSV** — UTF-8, three tab-separated columns
//!   `word<TAB>lemma<TAB>morphcode`, one token per line, blank line between
//!   sentences (CoNLL convention). Lines starting with `#` are skipped.
//! * **Plain tokens** — one sentence per line, space-separated tokens.
//!
//! Readers yield sentences lazily; memory use is bounded by the largest
//! sentence, not the corpus.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::morph::{MorphCode, MorphCodeError};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: expected 3 tab-separated fields, found {found}")]
    MalformedLine { line: u64, found: usize },
    #[error("line {line}: empty {field} field")]
    EmptyField { line: u64, field: &'static str },
    #[error("line {line}: {source}")]
    MorphCode {
        line: u64,
        source: MorphCodeError,
    },
    #[error("invalid UTF-8 at byte offset {offset}")]
    Decoding { offset: u64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One token of an annotated corpus: surface form, lemma, and parsed
/// KR morphological code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedToken {
    pub surface: String,
    pub lemma: String,
    pub morph: MorphCode,
}

/// A sentence of annotated tokens.
pub type AnnotatedSentence = Vec<AnnotatedToken>;
/// A processed sentence: plain text tokens.
pub type TokenSentence = Vec<String>;

/// Parse one annotated TSV line into a token. `line_no` is 1-based and is
/// only used for error reporting; blank lines (sentence separators) are the
/// caller's concern.
pub fn parse_tsv_line(line: &str, line_no: u64) -> Result<AnnotatedToken, CorpusError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 3 {
        return Err(CorpusError::MalformedLine {
            line: line_no,
            found: fields.len(),
        });
    }
    if fields[0].is_empty() {
        return Err(CorpusError::EmptyField { line: line_no, field: "surface" });
    }
    if fields[1].is_empty() {
        return Err(CorpusError::EmptyField { line: line_no, field: "lemma" });
    }
    let morph = MorphCode::parse(fields[2])
        .map_err(|source| CorpusError::MorphCode { line: line_no, source })?;
    Ok(AnnotatedToken {
        surface: fields[0].to_string(),
        lemma: fields[1].to_string(),
        morph,
    })
}

/// Reads raw lines while tracking line numbers and byte offsets so that
/// decoding errors can report the exact input position.
struct LineReader<R: BufRead> {
    inner: R,
    buf: Vec<u8>,
    line_no: u64,
    byte_offset: u64,
}

impl<R: BufRead> LineReader<R> {
    fn new(inner: R) -> Self {
        LineReader { inner, buf: Vec::new(), line_no: 0, byte_offset: 0 }
    }

    /// Next line without the trailing newline, or `None` at end of input.
    fn next_line(&mut self) -> Option<Result<(String, u64), CorpusError>> {
        self.buf.clear();
        let start = self.byte_offset;
        match self.inner.read_until(b'\n', &mut self.buf) {
            Ok(0) => None,
            Ok(n) => {
                self.byte_offset += n as u64;
                self.line_no += 1;
                let mut slice = &self.buf[..];
                if slice.last() == Some(&b'\n') {
                    slice = &slice[..slice.len() - 1];
                }
                if slice.last() == Some(&b'\r') {
                    slice = &slice[..slice.len() - 1];
                }
                match std::str::from_utf8(slice) {
                    Ok(s) => Some(Ok((s.to_string(), self.line_no))),
                    Err(e) => Some(Err(CorpusError::Decoding {
                        offset: start + e.valid_up_to() as u64,
                    })),
                }
            }
            Err(e) => Some(Err(e.into())),
        }
    }
}

/// Streaming reader for the annotated TSV format.
pub struct TsvReader<R: BufRead> {
    lines: LineReader<R>,
    done: bool,
}

impl<R: BufRead> TsvReader<R> {
    pub fn new(source: R) -> Self {
        TsvReader { lines: LineReader::new(source), done: false }
    }
}

impl<R: BufRead> Iterator for TsvReader<R> {
    type Item = Result<AnnotatedSentence, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut sent = Vec::new();
        loop {
            match self.lines.next_line() {
                None => {
                    self.done = true;
                    return if sent.is_empty() { None } else { Some(Ok(sent)) };
                }
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(e));
                }
                Some(Ok((line, no))) => {
                    if line.is_empty() {
                        if !sent.is_empty() {
                            return Some(Ok(sent));
                        }
                        continue; // consecutive separators
                    }
                    if line.starts_with('#') {
                        continue;
                    }
                    match parse_tsv_line(&line, no) {
                        Ok(tok) => sent.push(tok),
                        Err(e) => {
                            self.done = true;
                            return Some(Err(e));
                        }
                    }
                }
            }
        }
    }
}

/// Streaming reader for the plain-tokens format. Empty lines are skipped
/// (sentences are non-empty by construction).
pub struct PlainReader<R: BufRead> {
    lines: LineReader<R>,
    done: bool,
}

impl<R: BufRead> PlainReader<R> {
    pub fn new(source: R) -> Self {
        PlainReader { lines: LineReader::new(source), done: false }
    }
}

impl<R: BufRead> Iterator for PlainReader<R> {
    type Item = Result<TokenSentence, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            match self.lines.next_line() {
                None => {
                    self.done = true;
                    return None;
                }
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(e));
                }
                Some(Ok((line, _))) => {
                    let toks: TokenSentence =
                        line.split_whitespace().map(str::to_string).collect();
                    if !toks.is_empty() {
                        return Some(Ok(toks));
                    }
                }
            }
        }
    }
}

pub fn read_annotated<R: BufRead>(source: R) -> TsvReader<R> {
    TsvReader::new(source)
}

pub fn read_plain<R: BufRead>(source: R) -> PlainReader<R> {
    PlainReader::new(source)
}

/// Write sentences in the plain-tokens format: one sentence per line,
/// tokens separated by single spaces.
pub fn write_plain<'a, W, I>(mut sink: W, sentences: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a TokenSentence>,
{
    for sent in sentences {
        sink.write_all(sent.join(" ").as_bytes())?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

/// Write sentences in the annotated TSV format with blank-line separators.
pub fn write_annotated<'a, W, I>(mut sink: W, sentences: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a AnnotatedSentence>,
{
    let mut first = true;
    for sent in sentences {
        if !first {
            sink.write_all(b"\n")?;
        }
        first = false;
        for tok in sent {
            writeln!(sink, "{}\t{}\t{}", tok.surface, tok.lemma, tok.morph.render())?;
        }
    }
    Ok(())
}

/// Exact occurrence counts over token sentences.
pub fn count_tokens<'a, I>(sentences: I) -> HashMap<String, u64>
where
    I: IntoIterator<Item = &'a TokenSentence>,
{
    let mut counts: HashMap<String, u64> = HashMap::new();
    for sent in sentences {
        for tok in sent {
            *counts.entry(tok.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// Surface-form and lemma occurrence counts over an annotated corpus,
/// emitted separately: distinct surfaces of one lemma merge in the lemma
/// dictionary but not in the surface dictionary.
pub fn count_annotated<'a, I>(sentences: I) -> (HashMap<String, u64>, HashMap<String, u64>)
where
    I: IntoIterator<Item = &'a AnnotatedSentence>,
{
    let mut surface: HashMap<String, u64> = HashMap::new();
    let mut lemma: HashMap<String, u64> = HashMap::new();
    for sent in sentences {
        for tok in sent {
            *surface.entry(tok.surface.clone()).or_insert(0) += 1;
            *lemma.entry(tok.lemma.clone()).or_insert(0) += 1;
        }
    }
    (surface, lemma)
}

/// Serialize a frequency dictionary as `token<TAB>count` lines, descending
/// by count with ties broken lexicographically (byte order).
pub fn write_frequency_dictionary<W: Write>(
    counts: &HashMap<String, u64>,
    mut sink: W,
) -> io::Result<()> {
    let mut entries: Vec<(&str, u64)> = counts.iter().map(|(t, &c)| (t.as_str(), c)).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    for (tok, c) in entries {
        writeln!(sink, "{tok}\t{c}")?;
    }
    Ok(())
}
