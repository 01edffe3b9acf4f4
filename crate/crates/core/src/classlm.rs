//! Class-based (POS) n-gram models.
//!
//! A class model factors the word probability as emission times class
//! sequence, P(w | h) = P(w | c(w)) · P(c(w) | c(h)), with deterministic
//! hard classes: every token type belongs to exactly one class. Lemma
//! tokens take their majority POS head over the annotated corpus; affix
//! tokens (`<PAST>`, …) are their own singleton classes; vocabulary
//! entries never observed in the annotated corpus fall into the `<unk>`
//! class. The class-sequence factor reuses the modified Kneser-Ney
//! machinery over class ids.
//!
//! Emissions are add-α smoothed over each class's member set, so every
//! per-class distribution sums to exactly one and singleton classes emit
//! their member with probability 1.

use std::collections::HashMap;
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::arpa;
use crate::corpus::{AnnotatedSentence, TokenSentence};
use crate::counts::TableBuilder;
use crate::eval::{self, EvalError, ProbSource};
use crate::kn::{self, NGramModel, TrainConfig, TrainError, LOG10_FLOOR};
use crate::preprocess::{deglutinize_token, PreprocessConfig, TokenMode};
use crate::vocab::{TokenId, Vocabulary, UNK_ID};
use crate::MAX_ORDER;

pub type ClassId = u32;

/// Default add-α emission smoothing.
pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("malformed class bundle: {0}")]
    Format(String),
    #[error(transparent)]
    Arpa(#[from] arpa::ArpaError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Total mapping token id → class id, plus the class vocabulary. The
/// reserved tokens map to identically named reserved classes.
#[derive(Debug, Clone)]
pub struct ClassAssignment {
    class_of: Vec<ClassId>,
    classes: Vocabulary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssignStats {
    /// Vocabulary entries never observed in the annotated corpus; they are
    /// assigned to the `<unk>` class.
    pub uncovered: u64,
}

impl ClassAssignment {
    /// Class of a token id; ids outside the vocabulary map to the
    /// `<unk>` class.
    pub fn class_of(&self, tok: TokenId) -> ClassId {
        self.class_of
            .get(tok as usize)
            .copied()
            .unwrap_or(self.class_of[UNK_ID as usize])
    }

    pub fn classes(&self) -> &Vocabulary {
        &self.classes
    }

    pub fn token_count(&self) -> usize {
        self.class_of.len()
    }

    /// Token ids per class id.
    pub fn members(&self) -> Vec<Vec<TokenId>> {
        let mut m = vec![Vec::new(); self.classes.len()];
        for (tok, &cls) in self.class_of.iter().enumerate() {
            m[cls as usize].push(tok as TokenId);
        }
        m
    }

    /// Map a text sentence to its class-symbol sentence.
    pub fn map_sentence(&self, vocab: &Vocabulary, sentence: &[String]) -> TokenSentence {
        sentence
            .iter()
            .map(|t| {
                let cls = self.class_of(vocab.id_or_unk(t));
                self.classes.token(cls).unwrap_or("<unk>").to_string()
            })
            .collect()
    }

    /// Write `token<TAB>class` lines in token-id order.
    pub fn write_to<W: Write>(&self, vocab: &Vocabulary, mut w: W) -> io::Result<()> {
        for (tok, &cls) in self.class_of.iter().enumerate() {
            writeln!(
                w,
                "{}\t{}",
                vocab.token(tok as TokenId).unwrap(),
                self.classes.token(cls).unwrap()
            )?;
        }
        Ok(())
    }

    /// Read an assignment written by [`ClassAssignment::write_to`],
    /// rebuilding both vocabularies from row order.
    pub fn read_from<R: BufRead>(r: R) -> Result<(Vocabulary, ClassAssignment), BundleError> {
        let mut vocab = Vocabulary::new();
        let mut classes = Vocabulary::new();
        let mut class_of = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let (tok, cls) = line
                .split_once('\t')
                .ok_or_else(|| BundleError::Format(format!("assignment line {} lacks a tab", i + 1)))?;
            let tok_id = vocab.intern(tok);
            if tok_id as usize != i {
                return Err(BundleError::Format(format!(
                    "assignment row {} out of order for token `{tok}`",
                    i + 1
                )));
            }
            class_of.push(classes.intern(cls));
        }
        if class_of.len() < 3 {
            return Err(BundleError::Format("assignment misses reserved tokens".into()));
        }
        Ok((vocab, ClassAssignment { class_of, classes }))
    }
}

/// Assign every vocabulary entry to a class by majority vote over the
/// annotated corpus (ties go to the lexicographically smaller class name).
/// `mode` selects which token stream the vocabulary was built from:
/// [`TokenMode::Glf`] votes the morph head for the lemma token and each
/// affix token for itself; [`TokenMode::Word`] votes the morph head for
/// the lowercased surface form.
pub fn assign_classes(
    vocab: &Vocabulary,
    corpus: &[AnnotatedSentence],
    mode: TokenMode,
    config: &PreprocessConfig,
) -> (ClassAssignment, AssignStats) {
    let mut votes: HashMap<TokenId, HashMap<String, u64>> = HashMap::new();
    let mut vote = |text: &str, class: &str| {
        if let Some(id) = vocab.id(text) {
            if id > 2 {
                *votes
                    .entry(id)
                    .or_default()
                    .entry(class.to_string())
                    .or_insert(0) += 1;
            }
        }
    };
    for sent in corpus {
        for tok in sent {
            match mode {
                TokenMode::Word => vote(&tok.surface.to_lowercase(), tok.morph.head()),
                _ => {
                    let parts = deglutinize_token(tok, config);
                    vote(&parts[0], tok.morph.head());
                    for affix in &parts[1..] {
                        vote(affix, affix);
                    }
                }
            }
        }
    }

    let mut classes = Vocabulary::new();
    let mut class_of = vec![0 as ClassId; vocab.len()];
    // Reserved tokens map to same-named reserved classes.
    class_of[0] = 0;
    class_of[1] = 1;
    class_of[2] = 2;
    let mut uncovered = 0u64;
    for (id, _) in vocab.iter().skip(3) {
        match votes.get(&id) {
            Some(tally) => {
                let mut best: Option<(&str, u64)> = None;
                for (name, &n) in tally {
                    best = match best {
                        None => Some((name, n)),
                        Some((bn, bc)) => {
                            if n > bc || (n == bc && name.as_str() < bn) {
                                Some((name, n))
                            } else {
                                Some((bn, bc))
                            }
                        }
                    };
                }
                let (name, _) = best.unwrap();
                let name = name.to_string();
                class_of[id as usize] = classes.intern(&name);
            }
            None => {
                uncovered += 1;
                class_of[id as usize] = 0; // <unk> class
            }
        }
    }
    (
        ClassAssignment { class_of, classes },
        AssignStats { uncovered },
    )
}

/// A trained class model: per-token emission log-probabilities plus a
/// class-sequence n-gram model. Immutable; queries are thread-safe.
#[derive(Debug, Clone)]
pub struct ClassLM {
    assignment: ClassAssignment,
    vocab: Vocabulary,
    emission_log10: Vec<f64>,
    transitions: NGramModel,
    alpha: f64,
}

impl ClassLM {
    pub fn assignment(&self) -> &ClassAssignment {
        &self.assignment
    }

    pub fn transitions(&self) -> &NGramModel {
        &self.transitions
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// log10 P(token | its class).
    pub fn emission_log10(&self, tok: TokenId) -> f64 {
        self.emission_log10
            .get(tok as usize)
            .copied()
            .unwrap_or_else(|| self.emission_log10[UNK_ID as usize])
    }
}

impl ProbSource for ClassLM {
    fn log10_prob(&self, word: TokenId, context: &[TokenId]) -> f64 {
        let w = if (word as usize) < self.vocab.len() { word } else { UNK_ID };
        let order = self.transitions.order();
        let take = context.len().min(order.saturating_sub(1));
        let mut cls_ctx = [0 as ClassId; MAX_ORDER];
        for (i, &t) in context[context.len() - take..].iter().enumerate() {
            cls_ctx[i] = self.assignment.class_of(t);
        }
        self.emission_log10(w)
            + self
                .transitions
                .log10_prob(self.assignment.class_of(w), &cls_ctx[..take])
    }

    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }
}

/// Train the emission and class-sequence factors over a processed token
/// corpus. The corpus must already be closed over `vocab` (thresholded);
/// `transitions_config` selects the class-sequence model's order, flavor
/// and pruning.
pub fn train_class_lm(
    assignment: ClassAssignment,
    corpus: &[TokenSentence],
    vocab: &Vocabulary,
    transitions_config: &TrainConfig,
    alpha: f64,
) -> Result<ClassLM, TrainError> {
    if alpha <= 0.0 || alpha.is_nan() {
        return Err(TrainError::BadConfig(format!(
            "emission alpha must be positive, got {alpha}"
        )));
    }
    if assignment.token_count() != vocab.len() {
        return Err(TrainError::BadConfig(
            "class assignment does not cover the vocabulary".into(),
        ));
    }
    // Class-sequence counts.
    let mut builder = TableBuilder::new(transitions_config.order, assignment.classes())
        .map_err(|e| TrainError::BadConfig(e.to_string()))?;
    let mut token_counts = vec![0u64; vocab.len()];
    let mut ids = Vec::new();
    for sent in corpus {
        ids.clear();
        for tok in sent {
            let t = vocab.id_or_unk(tok);
            token_counts[t as usize] += 1;
            ids.push(assignment.class_of(t));
        }
        builder.add_sentence_ids(&ids);
    }
    let transitions = kn::train(&builder.finish(), assignment.classes(), transitions_config)?;

    // Emissions: add-α over each class's member set. Normalized per class
    // by construction; a singleton class emits its member with
    // probability 1.
    let members = assignment.members();
    let mut emission_log10 = vec![LOG10_FLOOR; vocab.len()];
    for member_ids in &members {
        if member_ids.is_empty() {
            continue;
        }
        let class_total: u64 = member_ids.iter().map(|&t| token_counts[t as usize]).sum();
        let denom = class_total as f64 + alpha * member_ids.len() as f64;
        for &t in member_ids {
            let p = (token_counts[t as usize] as f64 + alpha) / denom;
            emission_log10[t as usize] = p.log10();
        }
    }
    Ok(ClassLM {
        assignment,
        vocab: vocab.clone(),
        emission_log10,
        transitions,
        alpha,
    })
}

/// log10 of the λ-blend of two probabilities:
/// log10(λ·10^word + (1−λ)·10^class), with exact endpoints.
pub fn interpolate_log10(word_lp: f64, class_lp: f64, lambda: f64) -> f64 {
    if lambda >= 1.0 {
        return word_lp;
    }
    if lambda <= 0.0 {
        return class_lp;
    }
    if word_lp == class_lp {
        return word_lp;
    }
    let m = word_lp.max(class_lp);
    m + (lambda * 10f64.powf(word_lp - m) + (1.0 - lambda) * 10f64.powf(class_lp - m)).log10()
}

/// Static linear interpolation of a word model with a class model.
pub struct Interpolated<'a, W: ProbSource + ?Sized, C: ProbSource + ?Sized> {
    pub word: &'a W,
    pub class: &'a C,
    pub lambda: f64,
}

impl<W: ProbSource + ?Sized, C: ProbSource + ?Sized> ProbSource for Interpolated<'_, W, C> {
    fn log10_prob(&self, word: TokenId, context: &[TokenId]) -> f64 {
        interpolate_log10(
            self.word.log10_prob(word, context),
            self.class.log10_prob(word, context),
            self.lambda,
        )
    }

    fn vocab(&self) -> &Vocabulary {
        self.word.vocab()
    }
}

/// Pick the interpolation weight from the fixed grid {0, 0.05, …, 1} that
/// minimizes dev perplexity; ties break toward the larger λ. Grid points
/// are evaluated in parallel.
pub fn tune_lambda<W: ProbSource, C: ProbSource>(
    word: &W,
    class: &C,
    dev: &[TokenSentence],
) -> Result<f64, EvalError> {
    if dev.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let ppls: Vec<(f64, f64)> = (0..=20u32)
        .into_par_iter()
        .map(|i| {
            let lambda = i as f64 / 20.0;
            let m = Interpolated { word, class, lambda };
            let ppl = eval::perplexity(&m, dev, "grid", "dev")
                .expect("dev corpus is non-empty")
                .perplexity;
            (lambda, ppl)
        })
        .collect();
    let mut best = ppls[0];
    for &(lambda, ppl) in &ppls[1..] {
        if ppl <= best.1 {
            best = (lambda, ppl);
        }
    }
    Ok(best.0)
}

/// Save a class model as a directory bundle: `assignment.tsv`,
/// `emissions.tsv` (token → log10 emission, shortest round-trip float
/// formatting), `transitions.arpa` and `manifest.txt`.
pub fn save_bundle(lm: &ClassLM, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(fs::File::create(dir.join("assignment.tsv"))?);
    lm.assignment.write_to(&lm.vocab, &mut w)?;
    w.flush()?;
    let mut w = BufWriter::new(fs::File::create(dir.join("emissions.tsv"))?);
    for (id, tok) in lm.vocab.iter() {
        writeln!(w, "{tok}\t{}", lm.emission_log10[id as usize])?;
    }
    w.flush()?;
    let mut w = BufWriter::new(fs::File::create(dir.join("transitions.arpa"))?);
    arpa::write_arpa(&lm.transitions, &mut w)?;
    w.flush()?;
    let mut w = BufWriter::new(fs::File::create(dir.join("manifest.txt"))?);
    writeln!(w, "alpha = {}", lm.alpha)?;
    writeln!(w, "transitions_order = {}", lm.transitions.order())?;
    writeln!(w, "transitions_flavor = {}", lm.transitions.flavor().as_str())?;
    writeln!(w, "tokens = {}", lm.vocab.len())?;
    writeln!(w, "classes = {}", lm.assignment.classes.len())?;
    w.flush()?;
    Ok(())
}

/// Load a bundle written by [`save_bundle`].
pub fn load_bundle(dir: &Path) -> Result<ClassLM, BundleError> {
    let f = fs::File::open(dir.join("assignment.tsv"))?;
    let (vocab, assignment) = ClassAssignment::read_from(BufReader::new(f))?;
    let f = fs::File::open(dir.join("emissions.tsv"))?;
    let mut emission_log10 = vec![LOG10_FLOOR; vocab.len()];
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        let (tok, lp) = line
            .split_once('\t')
            .ok_or_else(|| BundleError::Format(format!("emissions line {} lacks a tab", i + 1)))?;
        let id = vocab
            .id(tok)
            .ok_or_else(|| BundleError::Format(format!("emission for unknown token `{tok}`")))?;
        emission_log10[id as usize] = lp
            .parse()
            .map_err(|_| BundleError::Format(format!("bad emission value `{lp}`")))?;
    }
    let f = fs::File::open(dir.join("transitions.arpa"))?;
    let transitions = arpa::read_arpa(BufReader::new(f))?;
    let mut alpha = DEFAULT_ALPHA;
    let manifest = fs::read_to_string(dir.join("manifest.txt"))?;
    for line in manifest.lines() {
        if let Some((k, v)) = line.split_once('=') {
            if k.trim() == "alpha" {
                alpha = v
                    .trim()
                    .parse()
                    .map_err(|_| BundleError::Format("bad alpha in manifest".into()))?;
            }
        }
    }
    Ok(ClassLM { assignment, vocab, emission_log10, transitions, alpha })
}
