//! Perplexity evaluation and result reporting.
//!
//! Sentences are scored left to right: each token is conditioned on the
//! preceding tokens with `<s>` prepended, and the `</s>` event closes the
//! sentence. The event count N includes `</s>` but not `<s>`, so a uniform
//! model over |V| events has perplexity exactly |V|. Accumulation happens
//! in log2 (converted from the model's log10 at query time) and the
//! corpus-level sums are compensated, so the reported perplexity is
//! independent of sentence order to well below 1e-12.
//!
//! Out-of-vocabulary tokens are mapped to `<unk>` and counted; reports
//! carry both the closed-vocabulary perplexity (every event scored) and
//! the variant that skips eval-time OOV events.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::TokenSentence;
use crate::kn::NGramModel;
use crate::vocab::{TokenId, Vocabulary, BOS_ID, EOS_ID};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("evaluation corpus is empty")]
    EmptyCorpus,
}

/// A conditional probability source over a token vocabulary.
pub trait ProbSource: Sync {
    /// log10 P(word | context). Must be finite for every word id and
    /// context (unknown ids map to `<unk>`).
    fn log10_prob(&self, word: TokenId, context: &[TokenId]) -> f64;

    /// log2 P(word | context); default converts from log10. Models that
    /// can produce exact log2 values may override.
    fn log2_prob(&self, word: TokenId, context: &[TokenId]) -> f64 {
        self.log10_prob(word, context) * std::f64::consts::LOG2_10
    }

    fn vocab(&self) -> &Vocabulary;
}

impl ProbSource for NGramModel {
    fn log10_prob(&self, word: TokenId, context: &[TokenId]) -> f64 {
        NGramModel::log10_prob(self, word, context)
    }

    fn vocab(&self) -> &Vocabulary {
        NGramModel::vocab(self)
    }
}

/// Compensated (Kahan) summation; keeps corpus totals stable under
/// reordering of the added terms.
#[derive(Debug, Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

/// Per-sentence score: total log2 probability and event counts, plus the
/// same totals with eval-time OOV events excluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentenceScore {
    pub log2: f64,
    pub events: u64,
    pub oov: u64,
    pub log2_no_oov: f64,
}

/// Score one text sentence: events are each token plus `</s>`, each
/// conditioned on all preceding tokens with `<s>` prepended. Tokens
/// missing from the model vocabulary are scored as `<unk>` and counted
/// as OOV.
pub fn score_sentence<M: ProbSource + ?Sized>(model: &M, sentence: &[String]) -> SentenceScore {
    let vocab = model.vocab();
    let mut oov_flags = Vec::with_capacity(sentence.len());
    let mut padded = Vec::with_capacity(sentence.len() + 1);
    padded.push(BOS_ID);
    for tok in sentence {
        match vocab.id(tok) {
            Some(id) => {
                padded.push(id);
                oov_flags.push(false);
            }
            None => {
                padded.push(crate::vocab::UNK_ID);
                oov_flags.push(true);
            }
        }
    }
    let mut total = KahanSum::default();
    let mut total_no_oov = KahanSum::default();
    let mut oov = 0u64;
    for i in 1..padded.len() {
        let lp = model.log2_prob(padded[i], &padded[..i]);
        total.add(lp);
        if oov_flags[i - 1] {
            oov += 1;
        } else {
            total_no_oov.add(lp);
        }
    }
    let eos = model.log2_prob(EOS_ID, &padded);
    total.add(eos);
    total_no_oov.add(eos);
    SentenceScore {
        log2: total.value(),
        events: sentence.len() as u64 + 1,
        oov,
        log2_no_oov: total_no_oov.value(),
    }
}

/// Sentence log2 probability and event count over already-encoded ids.
pub fn sentence_logprob<M: ProbSource + ?Sized>(model: &M, ids: &[TokenId]) -> (f64, u64) {
    let mut padded = Vec::with_capacity(ids.len() + 1);
    padded.push(BOS_ID);
    padded.extend_from_slice(ids);
    let mut total = KahanSum::default();
    for i in 1..padded.len() {
        total.add(model.log2_prob(padded[i], &padded[..i]));
    }
    total.add(model.log2_prob(EOS_ID, &padded));
    (total.value(), ids.len() as u64 + 1)
}

/// One evaluation result. `perplexity` is `2^cross_entropy` by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub model: String,
    pub corpus: String,
    pub events: u64,
    pub oov: u64,
    /// Cross-entropy in bits per event.
    pub cross_entropy: f64,
    pub perplexity: f64,
    /// Perplexity with eval-time OOV events excluded (SRILM-style
    /// comparisons).
    pub ppl_no_oov: f64,
    pub cross: bool,
}

fn evaluate<M: ProbSource + ?Sized>(
    model: &M,
    sentences: &[TokenSentence],
    model_id: &str,
    corpus_id: &str,
    cross: bool,
) -> Result<EvalReport, EvalError> {
    if sentences.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    // Parallel scoring, order-preserving collect, fixed-order reduction.
    let scores: Vec<SentenceScore> = sentences
        .par_iter()
        .map(|s| score_sentence(model, s))
        .collect();
    let mut log2 = KahanSum::default();
    let mut log2_no_oov = KahanSum::default();
    let mut events = 0u64;
    let mut oov = 0u64;
    for s in &scores {
        log2.add(s.log2);
        log2_no_oov.add(s.log2_no_oov);
        events += s.events;
        oov += s.oov;
    }
    let h = -log2.value() / events as f64;
    let h_no_oov = if events > oov {
        -log2_no_oov.value() / (events - oov) as f64
    } else {
        f64::INFINITY
    };
    Ok(EvalReport {
        model: model_id.to_string(),
        corpus: corpus_id.to_string(),
        events,
        oov,
        cross_entropy: h,
        perplexity: h.exp2(),
        ppl_no_oov: h_no_oov.exp2(),
        cross,
    })
}

/// Perplexity of a corpus under a model (Σ log2 over all events, then
/// PPL = 2^H).
pub fn perplexity<M: ProbSource + ?Sized>(
    model: &M,
    sentences: &[TokenSentence],
    model_id: &str,
    corpus_id: &str,
) -> Result<EvalReport, EvalError> {
    evaluate(model, sentences, model_id, corpus_id, false)
}

/// Evaluate on a corpus foreign to the model's training corpus: tokens
/// outside the model vocabulary are mapped to `<unk>` before scoring and
/// the report is flagged as a cross-corpus run.
pub fn cross_evaluate<M: ProbSource + ?Sized>(
    model: &M,
    sentences: &[TokenSentence],
    model_id: &str,
    corpus_id: &str,
) -> Result<EvalReport, EvalError> {
    evaluate(model, sentences, model_id, corpus_id, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportLayout {
    ByModel,
    ByCorpus,
    CrossMatrix,
}

impl ReportLayout {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReportLayout::ByModel => "by-model",
            ReportLayout::ByCorpus => "by-corpus",
            ReportLayout::CrossMatrix => "cross-matrix",
        }
    }
}

/// Machine-readable records: one line per evaluation,
/// `model<TAB>corpus<TAB>N<TAB>oov<TAB>H<TAB>ppl`, H and ppl with fixed
/// 6-decimal formatting, sorted by (model, corpus).
pub fn render_records(reports: &[EvalReport]) -> String {
    let mut sorted: Vec<&EvalReport> = reports.iter().collect();
    sorted.sort_by(|a, b| (&a.model, &a.corpus).cmp(&(&b.model, &b.corpus)));
    let mut out = String::new();
    for r in sorted {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\n",
            r.model, r.corpus, r.events, r.oov, r.cross_entropy, r.perplexity
        ));
    }
    out
}

/// Aligned text table with one header line.
pub fn render_text(reports: &[EvalReport], layout: ReportLayout) -> String {
    match layout {
        ReportLayout::CrossMatrix => render_cross_matrix(reports),
        _ => render_rows(reports, layout),
    }
}

fn render_rows(reports: &[EvalReport], layout: ReportLayout) -> String {
    let mut sorted: Vec<&EvalReport> = reports.iter().collect();
    match layout {
        ReportLayout::ByCorpus => {
            sorted.sort_by(|a, b| (&a.corpus, &a.model).cmp(&(&b.corpus, &b.model)))
        }
        _ => sorted.sort_by(|a, b| (&a.model, &a.corpus).cmp(&(&b.model, &b.corpus))),
    }
    let header = ["model", "corpus", "N", "oov", "H", "ppl", "ppl-no-oov", "cross"];
    let mut rows: Vec<[String; 8]> = Vec::with_capacity(sorted.len());
    for r in sorted {
        rows.push([
            r.model.clone(),
            r.corpus.clone(),
            r.events.to_string(),
            r.oov.to_string(),
            format!("{:.6}", r.cross_entropy),
            format!("{:.6}", r.perplexity),
            format!("{:.6}", r.ppl_no_oov),
            if r.cross { "yes" } else { "no" }.to_string(),
        ]);
    }
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for (i, h) in header.iter().enumerate() {
        if i > 0 {
            out.push_str("  ");
        }
        out.push_str(&format!("{h:<width$}", width = widths[i]));
    }
    out.push('\n');
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            out.push_str(&format!("{cell:<width$}", width = widths[i]));
        }
        out.push('\n');
    }
    out
}

fn render_cross_matrix(reports: &[EvalReport]) -> String {
    let mut models: Vec<&str> = reports.iter().map(|r| r.model.as_str()).collect();
    models.sort_unstable();
    models.dedup();
    let mut corpora: Vec<&str> = reports.iter().map(|r| r.corpus.as_str()).collect();
    corpora.sort_unstable();
    corpora.dedup();
    let mut cell: HashMap<(&str, &str), f64> = HashMap::new();
    for r in reports {
        cell.insert((r.model.as_str(), r.corpus.as_str()), r.perplexity);
    }
    let mut rows: Vec<Vec<String>> = Vec::new();
    for m in &models {
        let mut row = vec![m.to_string()];
        for c in &corpora {
            row.push(match cell.get(&(*m, *c)) {
                Some(p) => format!("{p:.6}"),
                None => "-".to_string(),
            });
        }
        rows.push(row);
    }
    let mut header = vec!["model\\corpus".to_string()];
    header.extend(corpora.iter().map(|c| c.to_string()));
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for (i, h) in header.iter().enumerate() {
        if i > 0 {
            out.push_str("  ");
        }
        out.push_str(&format!("{h:<width$}", width = widths[i]));
    }
    out.push('\n');
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            out.push_str(&format!("{cell:<width$}", width = widths[i]));
        }
        out.push('\n');
    }
    out
}
