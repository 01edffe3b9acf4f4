//! Corpus preprocessing: deglutinization, deduplication, frequency
//! thresholding, seeded shuffling and train/dev/test splitting.
//!
//! Deglutinization splits a word form into its lowercased lemma followed by
//! one token per inflectional affix, `jelmondatával` →
//! `jelmondat <POSS> <CAS<INS>>`. Default zero morphemes (nominative case,
//! 3sg present) are encoded by absence in KR codes, so an affix-free token
//! emits just its lemma.

use std::collections::{BTreeSet, HashMap, HashSet};

use thiserror::Error;

use crate::corpus::{AnnotatedSentence, AnnotatedToken, TokenSentence};
use crate::morph::affix_name;
use crate::rng;
use crate::vocab::{Vocabulary, UNK};

/// Affix tag names treated as inflectional and therefore split into
/// separate tokens. KR tags are matched on their outer name, so `<CAS<INS>>`
/// matches `CAS`. The boundary between inflection and derivation is
/// configuration; this list covers case, possession, number, tense, mood,
/// person, definiteness and the infinitive.
pub const INFLECTIONAL_TAGS: &[&str] = &[
    "CAS", "POSS", "ANP", "PLUR", "PAST", "COND", "IMP", "SUBJUNC-IMP", "INF", "DEF", "MODAL",
    "1", "2", "FAM",
];

/// Derivational tags split by default despite not being inflections.
pub const DEFAULT_DERIVATIONAL_SPLITS: &[&str] = &["COMPAR", "SUPERLAT"];

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("split ratios must sum to 1 (got {0})")]
    BadRatios(f64),
}

/// Pipeline configuration. Serialized into run manifests so that a run is
/// reproducible from its recorded settings alone.
#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    /// Token types with corpus frequency below this are replaced by
    /// `<unk>`; 0 (or 1) disables replacement.
    pub threshold: u64,
    /// Affix tag names dropped from deglutinized output, for annotation
    /// schemes that mark zero morphemes explicitly. Empty by default.
    pub zero_morpheme_filter: BTreeSet<String>,
    /// Derivational tag names to split in addition to the inflectional set.
    pub included_derivational_tags: BTreeSet<String>,
    pub shuffle_seed: u64,
    /// Train/dev/test fractions, summing to 1.
    pub split_ratios: [f64; 3],
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            threshold: 0,
            zero_morpheme_filter: BTreeSet::new(),
            included_derivational_tags: DEFAULT_DERIVATIONAL_SPLITS
                .iter()
                .map(|s| s.to_string())
                .collect(),
            shuffle_seed: 0,
            split_ratios: [0.9, 0.05, 0.05],
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let sum: f64 = self.split_ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.split_ratios.iter().any(|&r| r < 0.0) {
            return Err(ConfigError::BadRatios(sum));
        }
        Ok(())
    }

    fn splits_affix(&self, affix: &str) -> bool {
        let name = affix_name(affix);
        if self.zero_morpheme_filter.contains(name) {
            return false;
        }
        INFLECTIONAL_TAGS.contains(&name) || self.included_derivational_tags.contains(name)
    }
}

/// Token-stream variants derived from an annotated corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenMode {
    /// Lowercased surface forms.
    Word,
    /// Deglutinized: lowercased lemma + one token per split affix.
    Glf,
    /// Each word replaced by its complete rendered morph code.
    FullPos,
    /// Deglutinized with the lemma replaced by the morph head.
    PosGlf,
}

impl TokenMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TokenMode::Word => "word",
            TokenMode::Glf => "glf",
            TokenMode::FullPos => "full-pos",
            TokenMode::PosGlf => "pos-glf",
        }
    }
}

/// Split one annotated token into its deglutinized form: the lowercased
/// lemma followed by the affix tags selected by `config`, in original order.
pub fn deglutinize_token(token: &AnnotatedToken, config: &PreprocessConfig) -> Vec<String> {
    let mut out = Vec::with_capacity(1 + token.morph.affixes().len());
    out.push(token.lemma.to_lowercase());
    for affix in token.morph.affixes() {
        if config.splits_affix(affix) {
            out.push(affix.clone());
        }
    }
    out
}

/// POS-stream modes of [`to_pos_stream`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosMode {
    FullPos,
    PosGlf,
}

/// Map an annotated sentence to one of the POS token streams: `FullPos`
/// renders each word's complete morph code as a single token; `PosGlf`
/// keeps the deglutinized affix tokens but replaces the lemma with the
/// morph head.
pub fn to_pos_stream(
    sentence: &AnnotatedSentence,
    mode: PosMode,
    config: &PreprocessConfig,
) -> TokenSentence {
    let mut out = Vec::with_capacity(sentence.len());
    for tok in sentence {
        match mode {
            PosMode::FullPos => out.push(tok.morph.render()),
            PosMode::PosGlf => {
                out.push(tok.morph.head().to_string());
                for affix in tok.morph.affixes() {
                    if config.splits_affix(affix) {
                        out.push(affix.clone());
                    }
                }
            }
        }
    }
    out
}

/// Map an annotated sentence to the token stream selected by `mode`.
pub fn sentence_tokens(
    sentence: &AnnotatedSentence,
    mode: TokenMode,
    config: &PreprocessConfig,
) -> TokenSentence {
    match mode {
        TokenMode::Word => sentence.iter().map(|t| t.surface.to_lowercase()).collect(),
        TokenMode::Glf => {
            let mut out = Vec::with_capacity(sentence.len());
            for tok in sentence {
                out.extend(deglutinize_token(tok, config));
            }
            out
        }
        TokenMode::FullPos => to_pos_stream(sentence, PosMode::FullPos, config),
        TokenMode::PosGlf => to_pos_stream(sentence, PosMode::PosGlf, config),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DedupStats {
    pub input: usize,
    pub removed: usize,
}

impl DedupStats {
    pub fn removed_fraction(&self) -> f64 {
        if self.input == 0 {
            0.0
        } else {
            self.removed as f64 / self.input as f64
        }
    }
}

/// Remove duplicate sentences, keeping the first occurrence of each
/// distinct token sequence; order is otherwise preserved.
pub fn dedup_sentences(sentences: Vec<TokenSentence>) -> (Vec<TokenSentence>, DedupStats) {
    let input = sentences.len();
    let mut seen: HashSet<TokenSentence> = HashSet::with_capacity(input);
    let mut out = Vec::with_capacity(input);
    for sent in sentences {
        if !seen.contains(&sent) {
            seen.insert(sent.clone());
            out.push(sent);
        }
    }
    let removed = input - out.len();
    (out, DedupStats { input, removed })
}

/// Replace every token whose corpus frequency is below `threshold` with
/// `<unk>` and build the closed vocabulary of the survivors. Frequencies
/// are computed over the entire corpus (thresholding precedes splitting).
/// Vocabulary ids are assigned in order of first occurrence.
pub fn apply_threshold(
    sentences: Vec<TokenSentence>,
    threshold: u64,
) -> (Vec<TokenSentence>, Vocabulary) {
    let counts = crate::corpus::count_tokens(&sentences);
    let mut vocab = Vocabulary::new();
    let sentences: Vec<TokenSentence> = sentences
        .into_iter()
        .map(|sent| {
            sent.into_iter()
                .map(|tok| {
                    if counts[&tok] < threshold {
                        UNK.to_string()
                    } else {
                        vocab.intern(&tok);
                        tok
                    }
                })
                .collect()
        })
        .collect();
    (sentences, vocab)
}

/// Permute sentences with the documented Fisher-Yates / SplitMix64 shuffle;
/// the same seed yields the same order on every platform.
pub fn shuffle_sentences<T>(sentences: &mut [T], seed: u64) {
    rng::shuffle(sentences, seed);
}

/// Split into contiguous train/dev/test parts: dev and test get
/// `⌊N·ratio⌋` sentences each, the remainder goes to train. Call after
/// shuffling.
pub fn split_corpus<T>(mut sentences: Vec<T>, ratios: [f64; 3]) -> (Vec<T>, Vec<T>, Vec<T>) {
    let n = sentences.len();
    let n_dev = (n as f64 * ratios[1]).floor() as usize;
    let n_test = (n as f64 * ratios[2]).floor() as usize;
    let n_train = n - n_dev - n_test;
    let test = sentences.split_off(n_train + n_dev);
    let dev = sentences.split_off(n_train);
    (sentences, dev, test)
}

/// Full in-memory pipeline over an already mode-mapped token corpus:
/// optional dedup, thresholding, shuffle, split.
pub struct PipelineOutput {
    pub train: Vec<TokenSentence>,
    pub dev: Vec<TokenSentence>,
    pub test: Vec<TokenSentence>,
    pub vocab: Vocabulary,
    pub dedup: Option<DedupStats>,
}

pub fn run_pipeline(
    mut sentences: Vec<TokenSentence>,
    config: &PreprocessConfig,
    dedup: bool,
) -> Result<PipelineOutput, ConfigError> {
    config.validate()?;
    let dedup_stats = if dedup {
        let (kept, stats) = dedup_sentences(sentences);
        sentences = kept;
        Some(stats)
    } else {
        None
    };
    let (mut sentences, vocab) = apply_threshold(sentences, config.threshold);
    shuffle_sentences(&mut sentences, config.shuffle_seed);
    let (train, dev, test) = split_corpus(sentences, config.split_ratios);
    Ok(PipelineOutput { train, dev, test, vocab, dedup: dedup_stats })
}

/// Count token types below `threshold`; exposed for pipeline statistics.
pub fn count_below_threshold(counts: &HashMap<String, u64>, threshold: u64) -> usize {
    counts.values().filter(|&&c| c < threshold).count()
}
