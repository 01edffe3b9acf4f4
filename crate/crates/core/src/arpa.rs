//! ARPA text model format.
#![allow(clippy::tabs_in_doc_comments)] // the format examples are literally tab-separated
//!
//! Layout written by [`write_arpa`] (and accepted, with whitespace
//! tolerance, by [`read_arpa`]):
//!
//! ```text
//! \data\
//! ngram 1=4
//! ngram 2=6
//!
//! \1-grams:
//! -0.522879	<unk>	0.000000
//! -99.000000	<s>	-0.301030
//! ...
//!
//! \2-grams:
//! -0.301030	<s> a
//! ...
//!
//! \end\
//! ```
//!
//! Per line: log10 probability, the gram's words joined by single spaces,
//! and — below the top order — the log10 backoff weight. The writer uses
//! fixed 6-decimal formatting, tab separators, `\n` line endings and emits
//! grams in vocabulary-id order, so writing is byte-stable: write → read →
//! write reproduces the file exactly. Reading quantizes log values to the 6
//! printed decimals.
//!
//! ARPA does not record the estimation flavor; models loaded from ARPA
//! report [`Flavor::Backoff`]. Queries are unaffected.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::kn::{Flavor, NGramModel, ProbEntry};
use crate::vocab::{TokenId, Vocabulary};
use crate::MAX_ORDER;

#[derive(Debug, Error)]
pub enum ArpaError {
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn malformed(line: u64, reason: impl Into<String>) -> ArpaError {
    ArpaError::Malformed { line, reason: reason.into() }
}

/// Write the model in the ARPA text format.
pub fn write_arpa<W: Write>(model: &NGramModel, mut sink: W) -> io::Result<()> {
    let n = model.order();
    sink.write_all(b"\\data\\\n")?;
    for k in 1..=n {
        writeln!(sink, "ngram {k}={}", model.gram_count(k))?;
    }
    sink.write_all(b"\n")?;
    let mut words = String::new();
    for k in 1..=n {
        writeln!(sink, "\\{k}-grams:")?;
        let mut err = None;
        model.for_each_entry(k, |gram, e| {
            if err.is_some() {
                return;
            }
            words.clear();
            for (i, &t) in gram.iter().enumerate() {
                if i > 0 {
                    words.push(' ');
                }
                words.push_str(model.vocab().token(t).unwrap_or("<unk>"));
            }
            let res = if k < n {
                writeln!(sink, "{:.6}\t{words}\t{:.6}", e.logp, e.bow)
            } else {
                writeln!(sink, "{:.6}\t{words}", e.logp)
            };
            if let Err(e) = res {
                err = Some(e);
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        sink.write_all(b"\n")?;
    }
    sink.write_all(b"\\end\\\n")?;
    Ok(())
}

/// Read an ARPA model. Lines before `\data\` are ignored; fields may be
/// separated by any whitespace. Section lengths must match the header
/// counts and every gram must be built from words introduced in the
/// unigram section.
pub fn read_arpa<R: BufRead>(source: R) -> Result<NGramModel, ArpaError> {
    let mut lines = source.lines().enumerate();
    let mut line_no = 0u64;

    // Preamble until \data\.
    loop {
        match lines.next() {
            None => return Err(malformed(line_no, "missing \\data\\ header")),
            Some((i, line)) => {
                line_no = i as u64 + 1;
                if line?.trim() == "\\data\\" {
                    break;
                }
            }
        }
    }

    // ngram K=N declarations.
    let mut declared: Vec<u64> = Vec::new();
    loop {
        let (i, line) = lines
            .next()
            .ok_or_else(|| malformed(line_no, "unexpected end of file in header"))?;
        line_no = i as u64 + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            if declared.is_empty() {
                continue;
            }
            break;
        }
        let rest = line
            .strip_prefix("ngram ")
            .ok_or_else(|| malformed(line_no, format!("expected `ngram K=N`, got `{line}`")))?;
        let (k, count) = rest
            .split_once('=')
            .ok_or_else(|| malformed(line_no, "expected `ngram K=N`"))?;
        let k: usize = k
            .trim()
            .parse()
            .map_err(|_| malformed(line_no, "bad ngram order"))?;
        let count: u64 = count
            .trim()
            .parse()
            .map_err(|_| malformed(line_no, "bad ngram count"))?;
        if k != declared.len() + 1 {
            return Err(malformed(line_no, format!("ngram orders must be 1..n, got {k}")));
        }
        declared.push(count);
    }
    let order = declared.len();
    if order == 0 || order > MAX_ORDER {
        return Err(malformed(line_no, format!("unsupported order {order}")));
    }

    let mut vocab = Vocabulary::new();
    let mut levels: Vec<HashMap<Box<[TokenId]>, ProbEntry>> =
        vec![HashMap::new(); order];

    for (k, &expected) in declared.iter().enumerate() {
        let k = k + 1;
        // Section header.
        loop {
            let (i, line) = lines
                .next()
                .ok_or_else(|| malformed(line_no, format!("missing \\{k}-grams: section")))?;
            line_no = i as u64 + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line == format!("\\{k}-grams:") {
                break;
            }
            return Err(malformed(line_no, format!("expected \\{k}-grams:, got `{line}`")));
        }
        // Entries.
        let mut seen = 0u64;
        loop {
            let (i, line) = lines
                .next()
                .ok_or_else(|| malformed(line_no, "unexpected end of file in section"))?;
            line_no = i as u64 + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                break;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let has_bow = match fields.len() {
                l if l == k + 1 => false,
                l if l == k + 2 => {
                    if k == order {
                        return Err(malformed(
                            line_no,
                            "backoff weight on a top-order gram",
                        ));
                    }
                    true
                }
                l => {
                    return Err(malformed(
                        line_no,
                        format!("expected {} or {} fields, got {l}", k + 1, k + 2),
                    ))
                }
            };
            let logp: f64 = fields[0]
                .parse()
                .map_err(|_| malformed(line_no, "bad log probability"))?;
            let bow: f64 = if has_bow {
                fields[k + 1]
                    .parse()
                    .map_err(|_| malformed(line_no, "bad backoff weight"))?
            } else {
                0.0
            };
            let mut gram = Vec::with_capacity(k);
            for &word in &fields[1..=k] {
                let id = if k == 1 {
                    vocab.intern(word)
                } else {
                    vocab.id(word).ok_or_else(|| {
                        malformed(line_no, format!("word `{word}` not in unigram section"))
                    })?
                };
                gram.push(id);
            }
            if levels[k - 1]
                .insert(gram.into_boxed_slice(), ProbEntry { logp, bow })
                .is_some()
            {
                return Err(malformed(line_no, "duplicate gram"));
            }
            seen += 1;
        }
        if seen != expected {
            return Err(malformed(
                line_no,
                format!("\\{k}-grams: section has {seen} entries, header declared {expected}"),
            ));
        }
    }

    // Trailer.
    loop {
        let (i, line) = lines
            .next()
            .ok_or_else(|| malformed(line_no, "missing \\end\\"))?;
        line_no = i as u64 + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line == "\\end\\" {
            break;
        }
        return Err(malformed(line_no, format!("expected \\end\\, got `{line}`")));
    }

    Ok(NGramModel::from_parts(order, Flavor::Backoff, vocab, levels))
}
