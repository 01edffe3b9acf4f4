//! Morphology-aware statistical language modeling.
//!
//! This crate implements a batch n-gram modeling pipeline for agglutinative
//! languages annotated with KR-style morphological codes:
//!
//! * [`corpus`] — the annotated-TSV corpus data model and streaming readers,
//!   plus unigram frequency dictionaries,
//! * [`morph`] — parsing of KR morphological codes (`NOUN<POSS><CAS<INS>>`),
//! * [`preprocess`] — deglutinization (splitting a word form into its lemma
//!   and separate inflection tokens), deduplication, frequency thresholding
//!   to `<unk>`, seeded shuffling and train/dev/test splitting,
//! * [`counts`] — trie-based n-gram counting with continuation counts and
//!   count-of-counts, shard merging, and a sorted binary count format,
//! * [`kn`] — modified Kneser-Ney estimation in pruned-backoff and
//!   unpruned-interpolated configurations, with constant-allocation queries,
//! * [`arpa`] — the ARPA text model format, byte-stable writer and reader,
//! * [`classlm`] — class-based (POS) models: deterministic class assignment,
//!   emission estimation, and linear interpolation with a word model,
//! * [`eval`] — sentence log-probabilities, perplexity, cross-corpus
//!   evaluation and report rendering.
//!
//! All pipeline stages are deterministic given their configuration: the same
//! inputs, seed and settings produce byte-identical artifacts.

pub mod arpa;
pub mod classlm;
pub mod corpus;
pub mod counts;
pub mod eval;
pub mod kn;
pub mod morph;
pub mod preprocess;
pub mod rng;
pub mod vocab;

pub use corpus::AnnotatedToken;
pub use morph::MorphCode;
pub use vocab::{TokenId, Vocabulary, BOS, BOS_ID, EOS, EOS_ID, UNK, UNK_ID};

/// Highest n-gram order supported by counting and estimation.
pub const MAX_ORDER: usize = 9;
