//! Trie-based n-gram counting.
//!
//! [`NGramTable`] stores every k-gram (k ≤ order) of the padded corpus in a
//! forward trie over token ids. Each sentence is padded with a single `<s>`
//! at the start and one `</s>` at the end, and every k-gram window of the
//! padded sequence is counted, so `a b a` at order 2 yields the bigrams
//! `(<s>,a) (a,b) (b,a) (a,</s>)`. Per node the table keeps the occurrence
//! count, the number of distinct successors (its children) and the number
//! of distinct predecessors — the continuation count that modified
//! Kneser-Ney uses at lower orders.
//!
//! Counting is shardable: tables built over disjoint sentence shards merge
//! with [`merge_tables`] (counts sum; successor/continuation statistics are
//! recomputed, not summed).
//!
//! # Binary count file
//!
//! Little-endian layout, stable across runs:
//!
//! ```text
//! magic      b"MLMC"
//! version    u16 = 1
//! order      u16
//! vocab_hash u64     (Vocabulary::hash64 of the counting vocabulary)
//! sentences  u64
//! n_k        u64 × order   (record count per order)
//! records    per order k, sorted lexicographically by id sequence:
//!            k × u32 gram ids, u64 count
//! ```
//!
//! Records are sorted so shard files can be merged by streaming without
//! materializing a trie.

use std::collections::HashMap;
use std::io::{self, Read, Write};

use thiserror::Error;

use crate::corpus::TokenSentence;
use crate::vocab::{TokenId, Vocabulary, BOS_ID, EOS_ID};
use crate::MAX_ORDER;

#[derive(Debug, Error)]
pub enum CountError {
    #[error("token `{token}` not in vocabulary (thresholding must run first)")]
    UnknownToken { token: String },
    #[error("order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("tables were counted against different vocabularies")]
    VocabMismatch,
    #[error("order must be in 1..={MAX_ORDER}, got {0}")]
    BadOrder(usize),
    #[error("malformed count file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone)]
struct Node {
    count: u64,
    /// Distinct predecessors: number of ids v such that (v ++ gram) occurs.
    cont: u64,
    /// Sorted by token id.
    children: Vec<(TokenId, u32)>,
}

impl Node {
    fn empty() -> Self {
        Node { count: 0, cont: 0, children: Vec::new() }
    }

    fn child(&self, tok: TokenId) -> Option<u32> {
        self.children
            .binary_search_by_key(&tok, |&(t, _)| t)
            .ok()
            .map(|i| self.children[i].1)
    }
}

/// Immutable count table; build with [`TableBuilder`] or [`count_ngrams`].
#[derive(Debug, Clone)]
pub struct NGramTable {
    order: usize,
    vocab_hash: u64,
    sentences: u64,
    nodes: Vec<Node>,
}

/// Per order k, the number of distinct k-grams occurring exactly 1..4
/// times: the inputs to modified Kneser-Ney discount estimation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountOfCounts {
    pub per_order: Vec<[u64; 4]>,
}

/// Incremental trie construction. `finish` seals the table and computes
/// continuation counts.
pub struct TableBuilder {
    order: usize,
    vocab_hash: u64,
    sentences: u64,
    counts: Vec<BuildNode>,
}

struct BuildNode {
    count: u64,
    children: HashMap<TokenId, u32>,
}

impl TableBuilder {
    pub fn new(order: usize, vocab: &Vocabulary) -> Result<Self, CountError> {
        if order == 0 || order > MAX_ORDER {
            return Err(CountError::BadOrder(order));
        }
        Ok(TableBuilder {
            order,
            vocab_hash: vocab.hash64(),
            sentences: 0,
            counts: vec![BuildNode { count: 0, children: HashMap::new() }],
        })
    }

    /// Count one already-encoded sentence (unpadded token ids).
    pub fn add_sentence_ids(&mut self, ids: &[TokenId]) {
        if ids.is_empty() {
            return;
        }
        self.sentences += 1;
        let mut padded = Vec::with_capacity(ids.len() + 2);
        padded.push(BOS_ID);
        padded.extend_from_slice(ids);
        padded.push(EOS_ID);
        for start in 0..padded.len() {
            let end = (start + self.order).min(padded.len());
            let mut node = 0u32;
            for &tok in &padded[start..end] {
                let next = match self.counts[node as usize].children.get(&tok) {
                    Some(&n) => n,
                    None => {
                        let n = self.counts.len() as u32;
                        self.counts.push(BuildNode { count: 0, children: HashMap::new() });
                        self.counts[node as usize].children.insert(tok, n);
                        n
                    }
                };
                self.counts[next as usize].count += 1;
                node = next;
            }
        }
    }

    /// Encode and count a text sentence. Every token must already be in the
    /// vocabulary; an unknown token signals a pipeline-order bug.
    pub fn add_sentence(
        &mut self,
        sentence: &[String],
        vocab: &Vocabulary,
    ) -> Result<(), CountError> {
        let mut ids = Vec::with_capacity(sentence.len());
        for tok in sentence {
            match vocab.id(tok) {
                Some(id) => ids.push(id),
                None => {
                    return Err(CountError::UnknownToken { token: tok.clone() })
                }
            }
        }
        self.add_sentence_ids(&ids);
        Ok(())
    }

    pub fn finish(self) -> NGramTable {
        let mut nodes: Vec<Node> = self
            .counts
            .into_iter()
            .map(|b| {
                let mut children: Vec<(TokenId, u32)> = b.children.into_iter().collect();
                children.sort_unstable_by_key(|&(t, _)| t);
                Node { count: b.count, cont: 0, children }
            })
            .collect();
        compute_continuations(&mut nodes, self.order);
        NGramTable {
            order: self.order,
            vocab_hash: self.vocab_hash,
            sentences: self.sentences,
            nodes,
        }
    }
}

/// For every k-gram with k ≥ 2, bump the continuation count of its suffix
/// (the gram minus its first token). The suffix gram always exists because
/// all orders ≤ n are counted.
fn compute_continuations(nodes: &mut [Node], order: usize) {
    fn walk(
        nodes: &mut [Node],
        node: u32,
        depth: usize,
        order: usize,
        path: &mut Vec<TokenId>,
    ) {
        if depth >= 2 {
            let mut suffix = 0u32;
            for &tok in &path[1..] {
                suffix = nodes[suffix as usize]
                    .child(tok)
                    .expect("suffix gram must be counted");
            }
            nodes[suffix as usize].cont += 1;
        }
        if depth == order {
            return;
        }
        let children = nodes[node as usize].children.clone();
        for (tok, child) in children {
            path.push(tok);
            walk(nodes, child, depth + 1, order, path);
            path.pop();
        }
    }
    let mut path: Vec<TokenId> = Vec::with_capacity(order);
    walk(nodes, 0, 0, order, &mut path);
}

impl NGramTable {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab_hash(&self) -> u64 {
        self.vocab_hash
    }

    pub fn sentences(&self) -> u64 {
        self.sentences
    }

    fn node_of(&self, gram: &[TokenId]) -> Option<u32> {
        let mut node = 0u32;
        for &tok in gram {
            node = self.nodes[node as usize].child(tok)?;
        }
        Some(node)
    }

    /// Occurrence count of a gram (0 if unseen).
    pub fn count(&self, gram: &[TokenId]) -> u64 {
        self.node_of(gram).map_or(0, |n| self.nodes[n as usize].count)
    }

    /// Continuation count: distinct ids v such that (v ++ gram) occurs.
    /// Defined for grams of length < order.
    pub fn continuation_count(&self, gram: &[TokenId]) -> u64 {
        self.node_of(gram).map_or(0, |n| self.nodes[n as usize].cont)
    }

    /// Distinct successor count of a gram used as a context.
    pub fn successor_count(&self, gram: &[TokenId]) -> u64 {
        self.node_of(gram)
            .map_or(0, |n| self.nodes[n as usize].children.len() as u64)
    }

    /// Number of distinct grams stored at order `k`.
    pub fn gram_count(&self, k: usize) -> u64 {
        let mut total = 0;
        self.for_each_gram(k, |_, _| total += 1);
        total
    }

    /// Total predicted events: sum of unigram counts excluding `<s>`.
    pub fn total_events(&self) -> u64 {
        self.nodes[0]
            .children
            .iter()
            .filter(|&&(t, _)| t != BOS_ID)
            .map(|&(_, n)| self.nodes[n as usize].count)
            .sum()
    }

    /// Visit every gram of order `k` in lexicographic id order with its
    /// `(count, continuation_count, successor_count)`.
    pub fn for_each_gram<F: FnMut(&[TokenId], GramStats)>(&self, k: usize, mut f: F) {
        let mut path = Vec::with_capacity(k);
        self.walk(0, k, &mut path, &mut f);
    }

    fn walk<F: FnMut(&[TokenId], GramStats)>(
        &self,
        node: u32,
        depth_left: usize,
        path: &mut Vec<TokenId>,
        f: &mut F,
    ) {
        if depth_left == 0 {
            let n = &self.nodes[node as usize];
            f(
                path,
                GramStats {
                    count: n.count,
                    continuation: n.cont,
                    successors: n.children.len() as u64,
                },
            );
            return;
        }
        for &(tok, child) in &self.nodes[node as usize].children {
            path.push(tok);
            self.walk(child, depth_left - 1, path, f);
            path.pop();
        }
    }

    /// Raw count histogram per order: n1..n4 tallies.
    pub fn count_of_counts(&self) -> CountOfCounts {
        let mut per_order = vec![[0u64; 4]; self.order];
        for k in 1..=self.order {
            self.for_each_gram(k, |_, stats| {
                if (1..=4).contains(&stats.count) {
                    per_order[k - 1][(stats.count - 1) as usize] += 1;
                }
            });
        }
        CountOfCounts { per_order }
    }

    /// Serialize in the documented binary layout.
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(b"MLMC")?;
        w.write_all(&1u16.to_le_bytes())?;
        w.write_all(&(self.order as u16).to_le_bytes())?;
        w.write_all(&self.vocab_hash.to_le_bytes())?;
        w.write_all(&self.sentences.to_le_bytes())?;
        for k in 1..=self.order {
            w.write_all(&self.gram_count(k).to_le_bytes())?;
        }
        for k in 1..=self.order {
            let mut err = None;
            self.for_each_gram(k, |gram, stats| {
                if err.is_some() {
                    return;
                }
                for &tok in gram {
                    if let Err(e) = w.write_all(&tok.to_le_bytes()) {
                        err = Some(e);
                        return;
                    }
                }
                if let Err(e) = w.write_all(&stats.count.to_le_bytes()) {
                    err = Some(e);
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        Ok(())
    }

    /// Read a table written by [`NGramTable::write_to`]; continuation
    /// counts are recomputed from the records.
    pub fn read_from<R: Read>(mut r: R) -> Result<NGramTable, CountError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"MLMC" {
            return Err(CountError::Format("bad magic".into()));
        }
        let version = read_u16(&mut r)?;
        if version != 1 {
            return Err(CountError::Format(format!("unsupported version {version}")));
        }
        let order = read_u16(&mut r)? as usize;
        if order == 0 || order > MAX_ORDER {
            return Err(CountError::BadOrder(order));
        }
        let vocab_hash = read_u64(&mut r)?;
        let sentences = read_u64(&mut r)?;
        let mut per_order = Vec::with_capacity(order);
        for _ in 0..order {
            per_order.push(read_u64(&mut r)?);
        }
        let mut nodes = vec![Node::empty()];
        let mut prev: Vec<TokenId> = Vec::new();
        for (k, &n_records) in per_order.iter().enumerate() {
            let k = k + 1;
            prev.clear();
            let mut gram = vec![0u32; k];
            for _ in 0..n_records {
                for slot in gram.iter_mut() {
                    *slot = read_u32(&mut r)?;
                }
                let count = read_u64(&mut r)?;
                if !prev.is_empty() && prev.as_slice() >= gram.as_slice() {
                    return Err(CountError::Format(format!(
                        "order-{k} records not strictly sorted"
                    )));
                }
                prev.clear();
                prev.extend_from_slice(&gram);
                // Descend; every proper prefix must already exist.
                let mut node = 0u32;
                for &tok in &gram[..k - 1] {
                    node = nodes[node as usize].child(tok).ok_or_else(|| {
                        CountError::Format(format!("order-{k} record lacks its prefix"))
                    })?;
                }
                if nodes[node as usize].child(*gram.last().unwrap()).is_some() {
                    return Err(CountError::Format(format!("duplicate order-{k} record")));
                }
                let idx = nodes.len() as u32;
                nodes.push(Node { count, cont: 0, children: Vec::new() });
                let last = *gram.last().unwrap();
                let pos = nodes[node as usize]
                    .children
                    .binary_search_by_key(&last, |&(t, _)| t)
                    .unwrap_err();
                nodes[node as usize].children.insert(pos, (last, idx));
            }
        }
        compute_continuations(&mut nodes, order);
        Ok(NGramTable { order, vocab_hash, sentences, nodes })
    }
}

/// Statistics reported by [`NGramTable::for_each_gram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GramStats {
    pub count: u64,
    pub continuation: u64,
    pub successors: u64,
}

fn read_u16<R: Read>(r: &mut R) -> io::Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Count all k-grams (k ≤ order) of a token corpus.
pub fn count_ngrams<'a, I>(
    sentences: I,
    order: usize,
    vocab: &Vocabulary,
) -> Result<NGramTable, CountError>
where
    I: IntoIterator<Item = &'a TokenSentence>,
{
    let mut builder = TableBuilder::new(order, vocab)?;
    for sent in sentences {
        builder.add_sentence(sent, vocab)?;
    }
    Ok(builder.finish())
}

/// Merge two tables counted with the same order and vocabulary: counts are
/// element-wise sums; continuation and successor statistics are recomputed.
pub fn merge_tables(a: &NGramTable, b: &NGramTable) -> Result<NGramTable, CountError> {
    if a.order != b.order {
        return Err(CountError::OrderMismatch { left: a.order, right: b.order });
    }
    if a.vocab_hash != b.vocab_hash {
        return Err(CountError::VocabMismatch);
    }
    let mut nodes = a.nodes.clone();
    // Fold b's grams into the copy, order by order so prefixes exist first.
    for k in 1..=b.order {
        b.for_each_gram(k, |gram, stats| {
            let mut node = 0u32;
            for &tok in gram {
                node = match nodes[node as usize].child(tok) {
                    Some(n) => n,
                    None => {
                        let idx = nodes.len() as u32;
                        nodes.push(Node::empty());
                        let pos = nodes[node as usize]
                            .children
                            .binary_search_by_key(&tok, |&(t, _)| t)
                            .unwrap_err();
                        nodes[node as usize].children.insert(pos, (tok, idx));
                        idx
                    }
                };
            }
            nodes[node as usize].count += stats.count;
        });
    }
    for node in nodes.iter_mut() {
        node.cont = 0;
    }
    compute_continuations(&mut nodes, a.order);
    Ok(NGramTable {
        order: a.order,
        vocab_hash: a.vocab_hash,
        sentences: a.sentences + b.sentences,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::{BOS_ID, EOS_ID};

    fn vocab_abc() -> Vocabulary {
        let mut v = Vocabulary::new();
        for t in ["a", "b", "c"] {
            v.intern(t);
        }
        v
    }

    fn sent(words: &[&str]) -> TokenSentence {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn bigram_counts_of_a_b_a() {
        let v = vocab_abc();
        let t = count_ngrams(&[sent(&["a", "b", "a"])], 2, &v).unwrap();
        let a = v.id("a").unwrap();
        let b = v.id("b").unwrap();
        assert_eq!(t.count(&[BOS_ID, a]), 1);
        assert_eq!(t.count(&[a, b]), 1);
        assert_eq!(t.count(&[b, a]), 1);
        assert_eq!(t.count(&[a, EOS_ID]), 1);
        assert_eq!(t.gram_count(2), 4);
        assert_eq!(t.count(&[a]), 2);
        assert_eq!(t.count(&[EOS_ID]), 1);
        assert_eq!(t.count(&[BOS_ID]), 1);
        assert_eq!(t.total_events(), 4); // 3 tokens + </s>
    }

    #[test]
    fn empty_corpus_yields_empty_table() {
        let v = vocab_abc();
        let t = count_ngrams(&[], 3, &v).unwrap();
        assert_eq!(t.gram_count(1), 0);
        assert_eq!(t.total_events(), 0);
    }

    #[test]
    fn unknown_token_is_an_error() {
        let v = vocab_abc();
        let err = count_ngrams(&[sent(&["a", "zzz"])], 2, &v).unwrap_err();
        assert!(matches!(err, CountError::UnknownToken { .. }));
    }

    #[test]
    fn continuation_counts_are_distinct_predecessors() {
        let v = vocab_abc();
        // a appears after <s>, after b, and after c → continuation 3.
        let corpus = vec![sent(&["a", "b", "a"]), sent(&["c", "a"])];
        let t = count_ngrams(&corpus, 2, &v).unwrap();
        let a = v.id("a").unwrap();
        assert_eq!(t.continuation_count(&[a]), 3);
        assert_eq!(t.continuation_count(&[v.id("b").unwrap()]), 1);
        // Both sentences end with `a`, so `</s>` has one distinct
        // predecessor.
        assert_eq!(t.continuation_count(&[EOS_ID]), 1);
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let v = vocab_abc();
        let t = count_ngrams(&[sent(&["a", "b"])], 2, &v).unwrap();
        let empty = count_ngrams(&[], 2, &v).unwrap();
        let m = merge_tables(&t, &empty).unwrap();
        let mut grams = Vec::new();
        m.for_each_gram(2, |g, s| grams.push((g.to_vec(), s)));
        let mut expect = Vec::new();
        t.for_each_gram(2, |g, s| expect.push((g.to_vec(), s)));
        assert_eq!(grams, expect);
    }

    #[test]
    fn merge_mismatches_are_rejected() {
        let v = vocab_abc();
        let t2 = count_ngrams(&[sent(&["a"])], 2, &v).unwrap();
        let t3 = count_ngrams(&[sent(&["a"])], 3, &v).unwrap();
        assert!(matches!(
            merge_tables(&t2, &t3),
            Err(CountError::OrderMismatch { .. })
        ));
        let mut v2 = Vocabulary::new();
        v2.intern("other");
        let other = count_ngrams(&[], 2, &v2).unwrap();
        assert!(matches!(merge_tables(&t2, &other), Err(CountError::VocabMismatch)));
    }

    #[test]
    fn count_of_counts_tallies() {
        let v = vocab_abc();
        // unigrams: a:2 b:1 c:1 </s>:2 <s>:2 → n1=2 n2=3
        let corpus = vec![sent(&["a", "b"]), sent(&["a", "c"])];
        let t = count_ngrams(&corpus, 1, &v).unwrap();
        let coc = t.count_of_counts();
        assert_eq!(coc.per_order[0], [2, 3, 0, 0]);
    }

    #[test]
    fn binary_roundtrip() {
        let v = vocab_abc();
        let corpus = vec![sent(&["a", "b", "a"]), sent(&["c", "a"])];
        let t = count_ngrams(&corpus, 3, &v).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let back = NGramTable::read_from(&buf[..]).unwrap();
        assert_eq!(back.order(), 3);
        assert_eq!(back.sentences(), 2);
        assert_eq!(back.vocab_hash(), t.vocab_hash());
        for k in 1..=3 {
            let mut a = Vec::new();
            t.for_each_gram(k, |g, s| a.push((g.to_vec(), s)));
            let mut b = Vec::new();
            back.for_each_gram(k, |g, s| b.push((g.to_vec(), s)));
            assert_eq!(a, b, "order {k}");
        }
        let mut buf2 = Vec::new();
        back.write_to(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let v = vocab_abc();
        let t = count_ngrams(&[sent(&["a", "b"])], 2, &v).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            NGramTable::read_from(&bad[..]),
            Err(CountError::Format(_))
        ));
        let truncated = &buf[..buf.len() - 4];
        assert!(NGramTable::read_from(truncated).is_err());
    }
}
