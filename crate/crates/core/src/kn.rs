//! Modified Kneser-Ney n-gram model estimation and querying.
//!
//! Two configurations are supported, selected by [`Flavor`] and the
//! per-order minimum counts of [`TrainConfig`]:
//!
//! * **pruned backoff** — discounted relative frequencies at each order;
//!   grams below their order's minimum count are never assigned (or stored)
//!   probabilities and their mass flows into the context's backoff weight,
//!   which renormalizes against the unseen lower-order mass;
//! * **unpruned interpolated** — every order folds the lower-order
//!   distribution into its stored probabilities, weighted by the leftover
//!   discount mass; the backoff weight of a context is that leftover mass.
//!
//! Estimation details, common to both flavors:
//!
//! * The highest order uses raw counts. Lower orders use continuation
//!   counts (distinct predecessors), except that grams starting with `<s>`
//!   keep their raw counts — nothing can precede `<s>`, so continuation
//!   counts are undefined for them.
//! * Three discounts D1, D2, D3+ per order, estimated from the
//!   count-of-count histogram of that order's estimation counts via
//!   Y = n1/(n1+2n2), D1 = 1−2Y·n2/n1, D2 = 2−3Y·n3/n2, D3+ = 3−4Y·n4/n3,
//!   clamped to [0, j]. Histograms too sparse for the closed forms (any
//!   n_j zero — where SRILM would abort) fall back to the single
//!   Kneser-Ney discount Y for all count classes, which keeps tiny
//!   corpora trainable.
//! * Context totals and discount histograms are computed over all counted
//!   grams, including ones below the minimum counts; pruning only excludes
//!   grams from probability assignment and storage.
//! * The unigram level is interpolated with the uniform distribution over
//!   predictable events (the vocabulary minus `<s>`) in both flavors, so
//!   every stored context distribution sums to one. `<s>` itself is stored
//!   with the conventional -99 sentinel log-probability and a real backoff
//!   weight; `</s>` is an ordinary predicted event.
//!
//! Queries follow the ARPA backoff recursion: a stored gram returns its
//! stored value, otherwise the context's backoff weight is added and the
//! context is shortened from the left. Unknown ids map to `<unk>`, and all
//! vocabulary entries are stored at the unigram level, so `log10_prob` is
//! total. The query path allocates nothing.

use std::collections::HashMap;

use thiserror::Error;

use crate::counts::{CountOfCounts, NGramTable};
use crate::vocab::{TokenId, Vocabulary, BOS_ID, UNK_ID};
use crate::MAX_ORDER;

/// Stored log-probabilities below this are floored to the ARPA zero
/// sentinel.
pub const LOG10_FLOOR: f64 = -99.0;

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("order {order}: all count-of-counts are zero; the order cannot be estimated")]
    DegenerateCounts { order: usize },
    #[error("corpus contains no events")]
    EmptyCorpus,
    #[error("count table was built against a different vocabulary")]
    VocabMismatch,
    #[error("invalid training configuration: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Backoff,
    Interpolated,
}

impl Flavor {
    pub fn as_str(&self) -> &'static str {
        match self {
            Flavor::Backoff => "backoff",
            Flavor::Interpolated => "interpolated",
        }
    }
}

/// The three per-order discounts, applied to estimation counts of
/// 1, 2 and ≥ 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discounts {
    pub d1: f64,
    pub d2: f64,
    pub d3plus: f64,
}

impl Discounts {
    const ZERO: Discounts = Discounts { d1: 0.0, d2: 0.0, d3plus: 0.0 };

    /// Estimate from an (n1, n2, n3, n4) histogram. The three-discount
    /// closed forms need all four tallies; a histogram too sparse for them
    /// (any tally zero — where SRILM would abort) falls back to the single
    /// Kneser-Ney discount Y = n1/(n1+2n2) for every count class. `None`
    /// when every tally is zero and no discount can be derived at all.
    pub fn from_histogram(h: &[u64; 4]) -> Option<Discounts> {
        let [n1, n2, n3, n4] = *h;
        if n1 == 0 && n2 == 0 && n3 == 0 && n4 == 0 {
            return None;
        }
        let (f1, f2, f3, f4) = (n1 as f64, n2 as f64, n3 as f64, n4 as f64);
        let y = if n1 + 2 * n2 > 0 { f1 / (f1 + 2.0 * f2) } else { 0.0 };
        if n1 == 0 || n2 == 0 || n3 == 0 || n4 == 0 {
            return Some(Discounts { d1: y, d2: y, d3plus: y });
        }
        Some(Discounts {
            d1: (1.0 - 2.0 * y * f2 / f1).clamp(0.0, 1.0),
            d2: (2.0 - 3.0 * y * f3 / f2).clamp(0.0, 2.0),
            d3plus: (3.0 - 4.0 * y * f4 / f3).clamp(0.0, 3.0),
        })
    }

    /// Discount for an estimation count (0 for unseen).
    pub fn for_count(&self, c: u64) -> f64 {
        match c {
            0 => 0.0,
            1 => self.d1,
            2 => self.d2,
            _ => self.d3plus,
        }
    }
}

/// Per-order discounts from a count-of-counts table.
pub fn estimate_discounts(coc: &CountOfCounts) -> Result<Vec<Discounts>, TrainError> {
    coc.per_order
        .iter()
        .enumerate()
        .map(|(i, h)| {
            Discounts::from_histogram(h).ok_or(TrainError::DegenerateCounts { order: i + 1 })
        })
        .collect()
}

/// Training configuration. `min_counts[k-1]` is the minimum raw count for
/// an order-k gram to be stored; the unigram level always stores the whole
/// vocabulary regardless of `min_counts[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub order: usize,
    pub flavor: Flavor,
    pub min_counts: Vec<u64>,
}

impl TrainConfig {
    /// Unpruned model of the given flavor (all minimum counts 1).
    pub fn unpruned(order: usize, flavor: Flavor) -> TrainConfig {
        TrainConfig { order, flavor, min_counts: vec![1; order] }
    }

    /// The pruned backoff configuration: minimum counts 1 for orders 1-2
    /// and 2 above, i.e. (1, 1, 2, 2, 2) for a 5-gram model.
    pub fn srilm_default(order: usize) -> TrainConfig {
        TrainConfig {
            order,
            flavor: Flavor::Backoff,
            min_counts: (1..=order).map(|k| if k <= 2 { 1 } else { 2 }).collect(),
        }
    }

    /// The unpruned interpolated configuration.
    pub fn unpruned_interpolated(order: usize) -> TrainConfig {
        TrainConfig::unpruned(order, Flavor::Interpolated)
    }

    fn validate(&self, table_order: usize) -> Result<(), TrainError> {
        if self.order == 0 || self.order > MAX_ORDER {
            return Err(TrainError::BadConfig(format!(
                "order must be in 1..={MAX_ORDER}, got {}",
                self.order
            )));
        }
        if self.order > table_order {
            return Err(TrainError::BadConfig(format!(
                "order {} exceeds count table order {table_order}",
                self.order
            )));
        }
        if self.min_counts.len() != self.order {
            return Err(TrainError::BadConfig(format!(
                "min_counts has {} entries for order {}",
                self.min_counts.len(),
                self.order
            )));
        }
        if self.min_counts.contains(&0) {
            return Err(TrainError::BadConfig("min_counts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Stored per-gram values. `bow` is the log10 backoff weight, meaningful
/// for orders below the top; it is 0 (weight 1) for grams never used as a
/// context.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbEntry {
    pub logp: f64,
    pub bow: f64,
}

/// A trained (or loaded) n-gram model: log10 conditional probabilities and
/// backoff weights per stored gram. Immutable; queries are thread-safe.
#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    flavor: Flavor,
    vocab: Vocabulary,
    levels: Vec<HashMap<Box<[TokenId]>, ProbEntry>>,
}

impl NGramModel {
    pub(crate) fn from_parts(
        order: usize,
        flavor: Flavor,
        vocab: Vocabulary,
        levels: Vec<HashMap<Box<[TokenId]>, ProbEntry>>,
    ) -> NGramModel {
        NGramModel { order, flavor, vocab, levels }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Number of stored grams at order `k`.
    pub fn gram_count(&self, k: usize) -> usize {
        self.levels.get(k - 1).map_or(0, HashMap::len)
    }

    /// Stored entry for an exact gram, if present.
    pub fn entry(&self, gram: &[TokenId]) -> Option<&ProbEntry> {
        self.levels.get(gram.len() - 1)?.get(gram)
    }

    /// Visit stored grams of order `k` in lexicographic id order.
    pub fn for_each_entry<F: FnMut(&[TokenId], &ProbEntry)>(&self, k: usize, mut f: F) {
        let Some(level) = self.levels.get(k - 1) else { return };
        let mut keys: Vec<&Box<[TokenId]>> = level.keys().collect();
        keys.sort_unstable();
        for key in keys {
            f(key, &level[key.as_ref()]);
        }
    }

    /// log10 P(word | context), the ARPA backoff recursion. Only the last
    /// order−1 context ids are used; ids outside the vocabulary map to
    /// `<unk>`. Total over all inputs; allocates nothing.
    pub fn log10_prob(&self, word: TokenId, context: &[TokenId]) -> f64 {
        let vocab_len = self.vocab.len() as TokenId;
        let map = |t: TokenId| if t < vocab_len { t } else { UNK_ID };
        let take = context.len().min(self.order - 1);
        let mut buf = [0 as TokenId; MAX_ORDER];
        for (i, &t) in context[context.len() - take..].iter().enumerate() {
            buf[i] = map(t);
        }
        buf[take] = map(word);
        let key = &buf[..=take];

        let mut acc = 0.0;
        for start in 0..key.len() {
            let gram = &key[start..];
            if let Some(e) = self.levels[gram.len() - 1].get(gram) {
                return acc + e.logp;
            }
            let ctx = &key[start..key.len() - 1];
            if let Some(e) = self.levels[ctx.len() - 1].get(ctx) {
                acc += e.bow;
            }
        }
        // Unreachable: every vocabulary id is stored at the unigram level.
        acc + LOG10_FLOOR
    }
}

/// Estimation counts: raw at the top order and for `<s>`-initial grams,
/// continuation counts otherwise.
fn adjusted(k: usize, top: usize, gram: &[TokenId], raw: u64, cont: u64) -> u64 {
    if k == top || gram[0] == BOS_ID {
        raw
    } else {
        cont
    }
}

struct GramRec {
    gram: Box<[TokenId]>,
    raw: u64,
    adj: u64,
}

#[derive(Debug, Clone, Copy)]
struct BuildEntry {
    prob: f64,
    bow: f64,
}

/// Linear-space query against partially built levels; mirrors
/// [`NGramModel::log10_prob`].
fn query_linear(levels: &[HashMap<Box<[TokenId]>, BuildEntry>], key: &[TokenId]) -> f64 {
    let mut acc = 1.0;
    for start in 0..key.len() {
        let gram = &key[start..];
        if let Some(e) = levels[gram.len() - 1].get(gram) {
            return acc * e.prob;
        }
        let ctx = &key[start..key.len() - 1];
        if let Some(e) = levels[ctx.len() - 1].get(ctx) {
            acc *= e.bow;
        }
    }
    0.0 // unreachable: unigrams cover the vocabulary
}

/// Insert a gram needed only as a context of stored higher-order grams
/// (possible with non-monotone minimum counts). Its probability is exactly
/// what the backoff path would produce, so queries are unaffected.
fn ensure_stored(levels: &mut [HashMap<Box<[TokenId]>, BuildEntry>], gram: &[TokenId]) {
    if levels[gram.len() - 1].contains_key(gram) {
        return;
    }
    if gram.len() > 1 {
        ensure_stored(levels, &gram[..gram.len() - 1]);
    }
    let prob = query_linear(levels, gram);
    levels[gram.len() - 1].insert(gram.into(), BuildEntry { prob, bow: 1.0 });
}

/// Train a modified Kneser-Ney model from a count table. The table must
/// have been counted with `vocab` and at least `config.order` orders.
pub fn train(
    counts: &NGramTable,
    vocab: &Vocabulary,
    config: &TrainConfig,
) -> Result<NGramModel, TrainError> {
    config.validate(counts.order())?;
    if vocab.hash64() != counts.vocab_hash() {
        return Err(TrainError::VocabMismatch);
    }
    if counts.total_events() == 0 {
        return Err(TrainError::EmptyCorpus);
    }
    let n = config.order;

    // Per-order gram records, lexicographically sorted, with raw and
    // estimation counts.
    let mut grams: Vec<Vec<GramRec>> = Vec::with_capacity(n);
    for k in 1..=n {
        let mut recs = Vec::new();
        counts.for_each_gram(k, |gram, stats| {
            recs.push(GramRec {
                gram: gram.into(),
                raw: stats.count,
                adj: adjusted(k, n, gram, stats.count, stats.continuation),
            });
        });
        grams.push(recs);
    }

    // Discounts per order from estimation-count histograms (events only:
    // the <s> unigram is excluded).
    let mut discounts = Vec::with_capacity(n);
    for (i, recs) in grams.iter().enumerate() {
        let mut hist = [0u64; 4];
        let mut events = 0u64;
        for r in recs {
            if i == 0 && r.gram[0] == BOS_ID {
                continue;
            }
            events += 1;
            if (1..=4).contains(&r.adj) {
                hist[(r.adj - 1) as usize] += 1;
            }
        }
        if events == 0 {
            discounts.push(Discounts::ZERO);
        } else {
            discounts.push(
                Discounts::from_histogram(&hist)
                    .ok_or(TrainError::DegenerateCounts { order: i + 1 })?,
            );
        }
    }

    let mut levels: Vec<HashMap<Box<[TokenId]>, BuildEntry>> = vec![HashMap::new(); n];

    // Unigram level: every vocabulary entry is stored. The leftover
    // discount mass is spread uniformly over predictable events, keeping
    // the level normalized in both flavors.
    {
        let d = &discounts[0];
        let mut adj_of = vec![0u64; vocab.len()];
        for r in &grams[0] {
            adj_of[r.gram[0] as usize] = r.adj;
        }
        let total: u64 = adj_of
            .iter()
            .enumerate()
            .filter(|&(id, _)| id as TokenId != BOS_ID)
            .map(|(_, &a)| a)
            .sum();
        if total == 0 {
            return Err(TrainError::EmptyCorpus);
        }
        let total = total as f64;
        let mut discount_mass = 0.0;
        for (id, &a) in adj_of.iter().enumerate() {
            if id as TokenId != BOS_ID {
                discount_mass += d.for_count(a);
            }
        }
        let gamma = (discount_mass / total).clamp(0.0, 1.0);
        let uniform = gamma / vocab.event_count() as f64;
        for (id, &a) in adj_of.iter().enumerate() {
            let id = id as TokenId;
            let prob = if id == BOS_ID {
                0.0 // sentinel; <s> is never a predicted event
            } else {
                (a as f64 - d.for_count(a)) / total + uniform
            };
            levels[0].insert(vec![id].into_boxed_slice(), BuildEntry { prob, bow: 1.0 });
        }
    }

    // Higher orders, bottom-up. Gram records are sorted, so extensions of
    // one context are contiguous.
    for k in 2..=n {
        let recs = std::mem::take(&mut grams[k - 1]);
        let min_count = config.min_counts[k - 1];
        let d = &discounts[k - 1];
        let mut i = 0;
        while i < recs.len() {
            let ctx = &recs[i].gram[..k - 1];
            let mut j = i;
            while j < recs.len() && &recs[j].gram[..k - 1] == ctx {
                j += 1;
            }
            let group = &recs[i..j];
            i = j;

            let total: u64 = group.iter().map(|r| r.adj).sum();
            let total = total as f64;
            let survivors: Vec<&GramRec> =
                group.iter().filter(|r| r.raw >= min_count).collect();
            let sum_f: f64 = survivors
                .iter()
                .map(|r| (r.adj as f64 - d.for_count(r.adj)) / total)
                .sum();
            let gamma = (1.0 - sum_f).clamp(0.0, 1.0);

            if survivors.is_empty() {
                // Nothing stored for this context; its backoff weight stays
                // 1 and queries fall through to the lower order.
                continue;
            }
            ensure_stored(&mut levels, ctx);

            let mut entries: Vec<(Box<[TokenId]>, f64)> = Vec::with_capacity(survivors.len());
            let bow;
            match config.flavor {
                Flavor::Interpolated => {
                    for r in &survivors {
                        let f = (r.adj as f64 - d.for_count(r.adj)) / total;
                        let p_low = query_linear(&levels, &r.gram[1..]);
                        entries.push((r.gram.clone(), f + gamma * p_low));
                    }
                    bow = gamma;
                }
                Flavor::Backoff => {
                    let sum_p_low: f64 = survivors
                        .iter()
                        .map(|r| query_linear(&levels, &r.gram[1..]))
                        .sum();
                    let den = 1.0 - sum_p_low;
                    if den > 1e-12 {
                        for r in &survivors {
                            let f = (r.adj as f64 - d.for_count(r.adj)) / total;
                            entries.push((r.gram.clone(), f));
                        }
                        bow = gamma / den;
                    } else if sum_f > 0.0 {
                        // Survivors cover the whole lower-order mass;
                        // renormalize them and retire the backoff path.
                        for r in &survivors {
                            let f = (r.adj as f64 - d.for_count(r.adj)) / total;
                            entries.push((r.gram.clone(), f / sum_f));
                        }
                        bow = 1.0;
                    } else {
                        let u = 1.0 / survivors.len() as f64;
                        for r in &survivors {
                            entries.push((r.gram.clone(), u));
                        }
                        bow = 1.0;
                    }
                }
            }
            for (gram, prob) in entries {
                levels[k - 1].insert(gram, BuildEntry { prob, bow: 1.0 });
            }
            levels[k - 2]
                .get_mut(ctx)
                .expect("context stored")
                .bow = bow;
        }
    }

    // One conversion to log10 at the boundary.
    let log_levels: Vec<HashMap<Box<[TokenId]>, ProbEntry>> = levels
        .into_iter()
        .enumerate()
        .map(|(idx, level)| {
            level
                .into_iter()
                .map(|(gram, e)| {
                    let logp = if idx == 0 && gram[0] == BOS_ID {
                        LOG10_FLOOR
                    } else {
                        log10_floored(e.prob)
                    };
                    let bow = log10_floored(e.bow);
                    (gram, ProbEntry { logp, bow })
                })
                .collect()
        })
        .collect();

    Ok(NGramModel::from_parts(n, config.flavor, vocab.clone(), log_levels))
}

fn log10_floored(x: f64) -> f64 {
    let l = x.log10();
    if l.is_finite() {
        l.max(LOG10_FLOOR)
    } else {
        LOG10_FLOOR
    }
}

// ---------------------------------------------------------------------------
// Binary model format: a fast-load mirror of the stored tables.
//
//   magic    b"MLMM"
//   version  u16 = 1
//   flavor   u8 (0 backoff, 1 interpolated)
//   order    u16
//   vocab    u32 entry count, then per token u32 byte length + UTF-8 bytes
//   n_k      u64 × order (entry count per order)
//   entries  per order k, sorted by id sequence:
//            k × u32 ids, f64 logp, f64 bow (bow omitted at the top order)
//
// All integers and floats little-endian.
// ---------------------------------------------------------------------------

use std::io::{self, Read, Write};

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("malformed model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl NGramModel {
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(b"MLMM")?;
        w.write_all(&1u16.to_le_bytes())?;
        w.write_all(&[match self.flavor {
            Flavor::Backoff => 0u8,
            Flavor::Interpolated => 1u8,
        }])?;
        w.write_all(&(self.order as u16).to_le_bytes())?;
        w.write_all(&(self.vocab.len() as u32).to_le_bytes())?;
        for (_, tok) in self.vocab.iter() {
            w.write_all(&(tok.len() as u32).to_le_bytes())?;
            w.write_all(tok.as_bytes())?;
        }
        for k in 1..=self.order {
            w.write_all(&(self.gram_count(k) as u64).to_le_bytes())?;
        }
        for k in 1..=self.order {
            let mut err = None;
            self.for_each_entry(k, |gram, e| {
                if err.is_some() {
                    return;
                }
                let mut write = || -> io::Result<()> {
                    for &t in gram {
                        w.write_all(&t.to_le_bytes())?;
                    }
                    w.write_all(&e.logp.to_le_bytes())?;
                    if k < self.order {
                        w.write_all(&e.bow.to_le_bytes())?;
                    }
                    Ok(())
                };
                if let Err(e) = write() {
                    err = Some(e);
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<NGramModel, ModelIoError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"MLMM" {
            return Err(ModelIoError::Format("bad magic".into()));
        }
        let mut b2 = [0u8; 2];
        r.read_exact(&mut b2)?;
        if u16::from_le_bytes(b2) != 1 {
            return Err(ModelIoError::Format("unsupported version".into()));
        }
        let mut b1 = [0u8; 1];
        r.read_exact(&mut b1)?;
        let flavor = match b1[0] {
            0 => Flavor::Backoff,
            1 => Flavor::Interpolated,
            x => return Err(ModelIoError::Format(format!("unknown flavor {x}"))),
        };
        r.read_exact(&mut b2)?;
        let order = u16::from_le_bytes(b2) as usize;
        if order == 0 || order > MAX_ORDER {
            return Err(ModelIoError::Format(format!("bad order {order}")));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let vocab_len = u32::from_le_bytes(b4) as usize;
        let mut vocab = Vocabulary::new();
        for i in 0..vocab_len {
            r.read_exact(&mut b4)?;
            let len = u32::from_le_bytes(b4) as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            let tok = String::from_utf8(buf)
                .map_err(|_| ModelIoError::Format("invalid UTF-8 token".into()))?;
            if i < 3 {
                if vocab.token(i as TokenId) != Some(tok.as_str()) {
                    return Err(ModelIoError::Format("reserved tokens out of order".into()));
                }
            } else if vocab.intern(&tok) != i as TokenId {
                return Err(ModelIoError::Format(format!("duplicate token `{tok}`")));
            }
        }
        let mut counts = Vec::with_capacity(order);
        let mut b8 = [0u8; 8];
        for _ in 0..order {
            r.read_exact(&mut b8)?;
            counts.push(u64::from_le_bytes(b8));
        }
        let mut levels = vec![HashMap::new(); order];
        for (k, &n_entries) in counts.iter().enumerate() {
            let k = k + 1;
            for _ in 0..n_entries {
                let mut gram = vec![0 as TokenId; k];
                for slot in gram.iter_mut() {
                    r.read_exact(&mut b4)?;
                    *slot = u32::from_le_bytes(b4);
                }
                r.read_exact(&mut b8)?;
                let logp = f64::from_le_bytes(b8);
                let bow = if k < order {
                    r.read_exact(&mut b8)?;
                    f64::from_le_bytes(b8)
                } else {
                    0.0
                };
                levels[k - 1].insert(gram.into_boxed_slice(), ProbEntry { logp, bow });
            }
        }
        Ok(NGramModel::from_parts(order, flavor, vocab, levels))
    }
}
