//! Counting against the naive single-pass oracle, shard merging, and the
//! table's structural invariants.

mod support;

use morphlm::counts::{count_ngrams, merge_tables, NGramTable, TableBuilder};
use morphlm::vocab::{TokenId, BOS_ID};
use support::{build_vocab, encode_corpus, naive_count, synth_corpus};

fn assert_table_matches_oracle(table: &NGramTable, sentences: &[Vec<TokenId>], order: usize) {
    let oracle = naive_count(sentences, order);
    for k in 1..=order {
        let mut seen = 0usize;
        table.for_each_gram(k, |gram, stats| {
            seen += 1;
            assert_eq!(stats.count, oracle.count(gram), "count of {gram:?}");
            if k < order {
                assert_eq!(
                    stats.continuation,
                    oracle.continuation(gram),
                    "continuation of {gram:?}"
                );
                assert_eq!(
                    stats.successors,
                    oracle.successors(gram),
                    "successors of {gram:?}"
                );
            }
        });
        assert_eq!(seen, oracle.counts[k - 1].len(), "gram type count at order {k}");
    }
    assert_eq!(table.count_of_counts().per_order, oracle.count_of_counts());
}

#[test]
fn random_fixture_matches_naive_counter() {
    let corpus = synth_corpus(120, 40, 11);
    let vocab = build_vocab(&corpus);
    let ids = encode_corpus(&corpus, &vocab);
    for order in [1, 2, 3, 5] {
        let table = count_ngrams(&corpus, order, &vocab).unwrap();
        assert_table_matches_oracle(&table, &ids, order);
    }
}

#[test]
fn sharded_counting_equals_single_pass() {
    let corpus = synth_corpus(160, 30, 23);
    let vocab = build_vocab(&corpus);
    let ids = encode_corpus(&corpus, &vocab);
    let whole = count_ngrams(&corpus, 3, &vocab).unwrap();

    for shards in [2usize, 4] {
        let chunk = corpus.len().div_ceil(shards);
        let mut merged: Option<NGramTable> = None;
        for part in corpus.chunks(chunk) {
            let t = count_ngrams(part, 3, &vocab).unwrap();
            merged = Some(match merged {
                None => t,
                Some(m) => merge_tables(&m, &t).unwrap(),
            });
        }
        let merged = merged.unwrap();
        assert_eq!(merged.sentences(), whole.sentences());
        for k in 1..=3 {
            let mut a = Vec::new();
            whole.for_each_gram(k, |g, s| a.push((g.to_vec(), s)));
            let mut b = Vec::new();
            merged.for_each_gram(k, |g, s| b.push((g.to_vec(), s)));
            assert_eq!(a, b, "{shards} shards differ at order {k}");
        }
        assert_table_matches_oracle(&merged, &ids, 3);
    }
}

#[test]
fn merge_is_a_counting_homomorphism() {
    let left = synth_corpus(40, 25, 5);
    let right = synth_corpus(60, 25, 6);
    let mut all = left.clone();
    all.extend(right.iter().cloned());
    let vocab = build_vocab(&all);

    let ta = count_ngrams(&left, 2, &vocab).unwrap();
    let tb = count_ngrams(&right, 2, &vocab).unwrap();
    let merged = merge_tables(&ta, &tb).unwrap();
    let direct = count_ngrams(&all, 2, &vocab).unwrap();
    for k in 1..=2 {
        let mut a = Vec::new();
        merged.for_each_gram(k, |g, s| a.push((g.to_vec(), s)));
        let mut b = Vec::new();
        direct.for_each_gram(k, |g, s| b.push((g.to_vec(), s)));
        assert_eq!(a, b);
    }
}

#[test]
fn unigram_sum_and_prefix_monotonicity() {
    let corpus = synth_corpus(200, 35, 77);
    let vocab = build_vocab(&corpus);
    let tokens: u64 = corpus.iter().map(|s| s.len() as u64).sum();
    let table = count_ngrams(&corpus, 4, &vocab).unwrap();

    // Sum of unigram counts (excluding <s>) = tokens + sentences (</s>).
    assert_eq!(table.total_events(), tokens + corpus.len() as u64);

    // Every prefix of a gram is at least as frequent.
    for k in 2..=4 {
        table.for_each_gram(k, |gram, stats| {
            let prefix = table.count(&gram[..k - 1]);
            assert!(
                prefix >= stats.count,
                "prefix {:?} count {prefix} < gram count {}",
                &gram[..k - 1],
                stats.count
            );
        });
    }
}

#[test]
fn continuation_equals_distinct_extension_types() {
    // Continuation count of g == number of distinct (k+1)-gram types
    // ending in g; brute-force check.
    let corpus = synth_corpus(80, 20, 3);
    let vocab = build_vocab(&corpus);
    let ids = encode_corpus(&corpus, &vocab);
    let table = count_ngrams(&corpus, 3, &vocab).unwrap();
    let oracle = naive_count(&ids, 3);
    for k in 1..=2 {
        table.for_each_gram(k, |gram, stats| {
            let brute = oracle.counts[k]
                .keys()
                .filter(|g| &g[1..] == gram)
                .count() as u64;
            assert_eq!(stats.continuation, brute, "gram {gram:?}");
        });
    }
}

#[test]
fn streaming_builder_equals_batch() {
    let corpus = synth_corpus(50, 15, 9);
    let vocab = build_vocab(&corpus);
    let mut builder = TableBuilder::new(2, &vocab).unwrap();
    for s in &corpus {
        builder.add_sentence(s, &vocab).unwrap();
    }
    let streamed = builder.finish();
    let batch = count_ngrams(&corpus, 2, &vocab).unwrap();
    for k in 1..=2 {
        let mut a = Vec::new();
        streamed.for_each_gram(k, |g, s| a.push((g.to_vec(), s)));
        let mut b = Vec::new();
        batch.for_each_gram(k, |g, s| b.push((g.to_vec(), s)));
        assert_eq!(a, b);
    }
}

#[test]
fn bos_unigram_is_context_only() {
    let corpus = synth_corpus(30, 10, 1);
    let vocab = build_vocab(&corpus);
    let table = count_ngrams(&corpus, 2, &vocab).unwrap();
    assert_eq!(table.count(&[BOS_ID]), corpus.len() as u64);
    // <s> never occurs as a successor.
    assert_eq!(table.continuation_count(&[BOS_ID]), 0);
}
