//! Shared test support: independent reference implementations (oracles)
//! and deterministic synthetic corpora.
//!
//! The oracles re-derive everything from hash maps over the padded
//! sentences and compute probabilities by direct top-down recursion; they
//! share no code with the trie/bottom-up production paths they check.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use morphlm::corpus::TokenSentence;
use morphlm::kn::Flavor;
use morphlm::rng::SplitMix64;
use morphlm::vocab::{TokenId, Vocabulary, BOS_ID, EOS_ID, UNK_ID};

// ---------------------------------------------------------------------------
// Naive counting oracle
// ---------------------------------------------------------------------------

pub struct NaiveCounts {
    pub order: usize,
    /// Raw occurrence counts per order (index k-1).
    pub counts: Vec<HashMap<Vec<TokenId>, u64>>,
    /// Distinct predecessors per gram (orders 1..order-1).
    pub preds: Vec<HashMap<Vec<TokenId>, HashSet<TokenId>>>,
    /// Distinct successors per gram.
    pub succs: Vec<HashMap<Vec<TokenId>, HashSet<TokenId>>>,
}

pub fn naive_count(sentences: &[Vec<TokenId>], order: usize) -> NaiveCounts {
    let mut counts = vec![HashMap::new(); order];
    let mut preds = vec![HashMap::new(); order];
    let mut succs = vec![HashMap::new(); order];
    for s in sentences {
        if s.is_empty() {
            continue;
        }
        let mut padded = vec![BOS_ID];
        padded.extend_from_slice(s);
        padded.push(EOS_ID);
        for k in 1..=order {
            for win in padded.windows(k) {
                *counts[k - 1].entry(win.to_vec()).or_insert(0) += 1;
            }
        }
        for k in 2..=order.min(padded.len()) {
            for win in padded.windows(k) {
                preds[k - 2]
                    .entry(win[1..].to_vec())
                    .or_insert_with(HashSet::new)
                    .insert(win[0]);
                succs[k - 2]
                    .entry(win[..k - 1].to_vec())
                    .or_insert_with(HashSet::new)
                    .insert(win[k - 1]);
            }
        }
    }
    NaiveCounts { order, counts, preds, succs }
}

impl NaiveCounts {
    pub fn count(&self, gram: &[TokenId]) -> u64 {
        self.counts[gram.len() - 1].get(gram).copied().unwrap_or(0)
    }

    pub fn continuation(&self, gram: &[TokenId]) -> u64 {
        if gram.len() >= self.order {
            return 0;
        }
        self.preds[gram.len() - 1]
            .get(gram)
            .map_or(0, |s| s.len() as u64)
    }

    pub fn successors(&self, gram: &[TokenId]) -> u64 {
        if gram.len() >= self.order {
            return 0;
        }
        self.succs[gram.len() - 1]
            .get(gram)
            .map_or(0, |s| s.len() as u64)
    }

    /// Histogram oracle: n1..n4 of raw counts per order.
    pub fn count_of_counts(&self) -> Vec<[u64; 4]> {
        self.counts
            .iter()
            .map(|m| {
                let mut h = [0u64; 4];
                for &c in m.values() {
                    if (1..=4).contains(&c) {
                        h[(c - 1) as usize] += 1;
                    }
                }
                h
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Straight-line modified Kneser-Ney oracle
// ---------------------------------------------------------------------------

/// Reference estimator: trains from encoded sentences and answers linear
/// conditional probabilities by direct recursion over the estimation
/// equations (three-discount modified Kneser-Ney, single-discount fallback,
/// SRILM-style pruning, uniform-interpolated unigram base).
pub struct KnOracle {
    order: usize,
    flavor: Flavor,
    min_counts: Vec<u64>,
    vocab_size: usize,
    counts: Vec<HashMap<Vec<TokenId>, u64>>,
    preds: Vec<HashMap<Vec<TokenId>, HashSet<TokenId>>>,
    /// Extensions per context at order k >= 2: (word, raw, adjusted).
    ext: Vec<HashMap<Vec<TokenId>, Vec<(TokenId, u64, u64)>>>,
    /// (d1, d2, d3+) per order.
    discounts: Vec<(f64, f64, f64)>,
}

fn oracle_discounts(h: [u64; 4]) -> (f64, f64, f64) {
    let [n1, n2, n3, n4] = h;
    let (f1, f2, f3, f4) = (n1 as f64, n2 as f64, n3 as f64, n4 as f64);
    let y = if n1 + 2 * n2 > 0 { f1 / (f1 + 2.0 * f2) } else { 0.0 };
    if n1 == 0 || n2 == 0 || n3 == 0 || n4 == 0 {
        return (y, y, y);
    }
    (
        (1.0 - 2.0 * y * f2 / f1).clamp(0.0, 1.0),
        (2.0 - 3.0 * y * f3 / f2).clamp(0.0, 2.0),
        (3.0 - 4.0 * y * f4 / f3).clamp(0.0, 3.0),
    )
}

impl KnOracle {
    pub fn train(
        sentences: &[Vec<TokenId>],
        vocab_size: usize,
        order: usize,
        flavor: Flavor,
        min_counts: Vec<u64>,
    ) -> KnOracle {
        assert_eq!(min_counts.len(), order);
        let nc = naive_count(sentences, order);
        let counts = nc.counts;
        let preds = nc.preds;

        let adjusted = |k: usize, gram: &[TokenId], raw: u64| -> u64 {
            if k == order || gram[0] == BOS_ID {
                raw
            } else {
                preds[k - 1].get(gram).map_or(0, |s| s.len() as u64)
            }
        };

        // Per-order discount histograms over estimation counts of events.
        let mut discounts = Vec::with_capacity(order);
        for k in 1..=order {
            let mut h = [0u64; 4];
            for (gram, &raw) in &counts[k - 1] {
                if k == 1 && gram[0] == BOS_ID {
                    continue;
                }
                let a = adjusted(k, gram, raw);
                if (1..=4).contains(&a) {
                    h[(a - 1) as usize] += 1;
                }
            }
            discounts.push(oracle_discounts(h));
        }

        // Extension groups per context.
        let mut ext: Vec<HashMap<Vec<TokenId>, Vec<(TokenId, u64, u64)>>> =
            vec![HashMap::new(); order.saturating_sub(1)];
        for k in 2..=order {
            for (gram, &raw) in &counts[k - 1] {
                let a = adjusted(k, gram, raw);
                ext[k - 2]
                    .entry(gram[..k - 1].to_vec())
                    .or_default()
                    .push((gram[k - 1], raw, a));
            }
        }

        KnOracle {
            order,
            flavor,
            min_counts,
            vocab_size,
            counts,
            preds,
            ext,
            discounts,
        }
    }

    fn d(&self, k: usize, a: u64) -> f64 {
        let (d1, d2, d3) = self.discounts[k - 1];
        match a {
            0 => 0.0,
            1 => d1,
            2 => d2,
            _ => d3,
        }
    }

    /// Linear P(w | ctx); uses the last order-1 context ids, maps unknown
    /// ids to `<unk>`.
    pub fn prob(&self, word: TokenId, context: &[TokenId]) -> f64 {
        let map = |t: TokenId| if (t as usize) < self.vocab_size { t } else { UNK_ID };
        let w = map(word);
        let take = context.len().min(self.order - 1);
        let ctx: Vec<TokenId> = context[context.len() - take..]
            .iter()
            .map(|&t| map(t))
            .collect();
        self.p(w, &ctx)
    }

    fn unigram_adjusted(&self, w: TokenId) -> u64 {
        let gram = [w];
        let raw = self.counts[0].get(&gram[..].to_vec()).copied().unwrap_or(0);
        if self.order == 1 || w == BOS_ID {
            raw
        } else if raw == 0 {
            0
        } else {
            self.preds[0].get(&vec![w]).map_or(0, |s| s.len() as u64)
        }
    }

    fn p(&self, w: TokenId, h: &[TokenId]) -> f64 {
        let k = h.len() + 1;
        if k == 1 {
            if w == BOS_ID {
                return 0.0;
            }
            let mut total = 0.0;
            let mut discount_mass = 0.0;
            for id in 0..self.vocab_size as TokenId {
                if id == BOS_ID {
                    continue;
                }
                let a = self.unigram_adjusted(id);
                total += a as f64;
                discount_mass += self.d(1, a);
            }
            let a = self.unigram_adjusted(w);
            let f = (a as f64 - self.d(1, a)) / total;
            let gamma = discount_mass / total;
            return f + gamma / (self.vocab_size - 1) as f64;
        }

        let group = self.ext[k - 2].get(h);
        let Some(group) = group else {
            // Context never observed: full backoff with weight 1.
            return self.p(w, &h[1..]);
        };
        let total: f64 = group.iter().map(|&(_, _, a)| a as f64).sum();
        let min = self.min_counts[k - 1];
        let survivors: Vec<&(TokenId, u64, u64)> =
            group.iter().filter(|&&(_, raw, _)| raw >= min).collect();
        let sum_f: f64 = survivors
            .iter()
            .map(|&&(_, _, a)| (a as f64 - self.d(k, a)) / total)
            .sum();
        let gamma = (1.0 - sum_f).clamp(0.0, 1.0);
        let survivor = survivors.iter().find(|&&&(x, _, _)| x == w);

        match self.flavor {
            Flavor::Interpolated => match survivor {
                Some(&&(_, _, a)) => {
                    (a as f64 - self.d(k, a)) / total + gamma * self.p(w, &h[1..])
                }
                None => gamma * self.p(w, &h[1..]),
            },
            Flavor::Backoff => {
                let sum_p_low: f64 = survivors
                    .iter()
                    .map(|&&(x, _, _)| self.p(x, &h[1..]))
                    .sum();
                let den = 1.0 - sum_p_low;
                if den > 1e-12 {
                    match survivor {
                        Some(&&(_, _, a)) => (a as f64 - self.d(k, a)) / total,
                        None => gamma / den * self.p(w, &h[1..]),
                    }
                } else if sum_f > 0.0 {
                    match survivor {
                        Some(&&(_, _, a)) => ((a as f64 - self.d(k, a)) / total) / sum_f,
                        None => self.p(w, &h[1..]),
                    }
                } else {
                    match survivor {
                        Some(_) => 1.0 / survivors.len() as f64,
                        None => self.p(w, &h[1..]),
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Deterministic synthetic corpora
// ---------------------------------------------------------------------------

/// A Zipf-distributed corpus with planted bigram structure: with
/// probability ~0.65 the next token comes from a small per-predecessor
/// preference set, otherwise from a global Zipf(1.1) draw. Deterministic
/// in `seed`.
pub fn synth_corpus(n_sentences: usize, vocab_size: usize, seed: u64) -> Vec<TokenSentence> {
    assert!(vocab_size >= 8);
    let mut rng = SplitMix64::new(seed);
    // Zipf CDF over ranks 0..vocab_size.
    let mut cdf = Vec::with_capacity(vocab_size);
    let mut acc = 0.0f64;
    for r in 0..vocab_size {
        acc += 1.0 / ((r + 1) as f64).powf(1.1);
        cdf.push(acc);
    }
    let total = acc;
    let zipf = |rng: &mut SplitMix64| -> usize {
        let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * total;
        cdf.partition_point(|&c| c < u).min(vocab_size - 1)
    };
    let mut corpus = Vec::with_capacity(n_sentences);
    for _ in 0..n_sentences {
        let len = 3 + rng.next_below(12) as usize;
        let mut sent = Vec::with_capacity(len);
        let mut prev = zipf(&mut rng);
        sent.push(format!("w{prev}"));
        for _ in 1..len {
            let next = if rng.next_below(100) < 65 {
                let slot = rng.next_below(6) as usize;
                (prev.wrapping_mul(2654435761).wrapping_add(slot * 97)) % vocab_size
            } else {
                zipf(&mut rng)
            };
            sent.push(format!("w{next}"));
            prev = next;
        }
        corpus.push(sent);
    }
    corpus
}

/// A plain iid Zipf corpus (no planted structure).
pub fn zipf_corpus(n_sentences: usize, vocab_size: usize, seed: u64) -> Vec<TokenSentence> {
    let mut rng = SplitMix64::new(seed);
    let mut cdf = Vec::with_capacity(vocab_size);
    let mut acc = 0.0f64;
    for r in 0..vocab_size {
        acc += 1.0 / ((r + 1) as f64).powf(1.1);
        cdf.push(acc);
    }
    let total = acc;
    let mut corpus = Vec::with_capacity(n_sentences);
    for _ in 0..n_sentences {
        let len = 3 + rng.next_below(10) as usize;
        let mut sent = Vec::with_capacity(len);
        for _ in 0..len {
            let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * total;
            let r = cdf.partition_point(|&c| c < u).min(vocab_size - 1);
            sent.push(format!("w{r}"));
        }
        corpus.push(sent);
    }
    corpus
}

/// Deterministic annotated-TSV fixture: Zipf-ish lemma choice over three
/// POS heads with a realistic spread of KR affix groups, so that both the
/// token stream and the class stream have sparse tails.
pub fn annotated_fixture(n_sentences: usize, seed: u64) -> String {
    const CASES: [&str; 18] = [
        "ACC", "DAT", "INS", "ILL", "INE", "ELA", "ALL", "ADE", "ABL", "SBL", "SUE", "DEL",
        "TER", "CAU", "TRA", "FOR", "TEM", "ESS",
    ];
    let mut rng = SplitMix64::new(seed);
    let mut out = String::new();
    for s in 0..n_sentences {
        if s > 0 {
            out.push('\n');
        }
        let len = 3 + rng.next_below(7) as usize;
        for _ in 0..len {
            // Zipf-flavored lemma rank.
            let mut rank = 0usize;
            while rank < 59 && rng.next_below(100) < 55 {
                rank += 1;
            }
            let lemma = format!("lemma{rank}");
            let head = match rng.next_below(10) {
                0..=4 => "NOUN",
                5..=7 => "VERB",
                _ => "ADJ",
            };
            let mut code = head.to_string();
            match head {
                "NOUN" => {
                    if rng.next_below(100) < 30 {
                        code.push_str("<PLUR>");
                    }
                    if rng.next_below(100) < 20 {
                        code.push_str("<POSS>");
                    }
                    if rng.next_below(100) < 50 {
                        code.push_str(&format!(
                            "<CAS<{}>>",
                            CASES[rng.next_below(CASES.len() as u64) as usize]
                        ));
                    }
                }
                "VERB" => {
                    if rng.next_below(100) < 30 {
                        code.push_str("<PAST>");
                    }
                    if rng.next_below(100) < 25 {
                        code.push_str("<PLUR>");
                    }
                }
                _ => {
                    if rng.next_below(100) < 15 {
                        code.push_str("<COMPAR>");
                    }
                }
            }
            let surface = if code == head {
                lemma.clone()
            } else {
                format!("{lemma}x")
            };
            out.push_str(&format!("{surface}\t{lemma}\t{code}\n"));
        }
    }
    out
}

pub fn build_vocab(corpus: &[TokenSentence]) -> Vocabulary {
    let mut v = Vocabulary::new();
    for s in corpus {
        for t in s {
            v.intern(t);
        }
    }
    v
}

pub fn encode_corpus(corpus: &[TokenSentence], vocab: &Vocabulary) -> Vec<Vec<TokenId>> {
    corpus.iter().map(|s| vocab.encode(s)).collect()
}

/// Relative comparison with an absolute floor for near-zero values.
pub fn close_rel(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-12)
}
