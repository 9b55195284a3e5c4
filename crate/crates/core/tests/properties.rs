use std::collections::HashSet;

use proptest::prelude::*;

use techstop::ingest::TokenSequence;
use techstop::lists::{merge_lists, SourceTag, StopwordList};
use techstop::phrase::{detect_phrases, split_stopword_phrases, PhrasePassConfig};
use techstop::rank::{rank_terms, select_candidates, top_k, union_candidates, Metric};
use techstop::stats::{build_index, compute_all_stats, filter_vocabulary, IndexBuilder};

fn corpus_strategy() -> impl Strategy<Value = Vec<TokenSequence>> {
    prop::collection::vec(
        (0..12usize, prop::collection::vec(0..30usize, 1..15)),
        1..60,
    )
    .prop_map(|sentences| {
        sentences
            .into_iter()
            .map(|(doc, words)| TokenSequence::new(format!("p{doc}"), words.into_iter().map(|w| format!("w{w}")).collect()))
            .collect()
    })
}

proptest! {
    #[test]
    fn index_sums_are_consistent(corpus in corpus_strategy()) {
        let index = build_index(&corpus).unwrap();
        let total: u64 = corpus.iter().map(|s| s.tokens.len() as u64).sum();
        prop_assert_eq!(index.total_tokens(), total);
        let lengths: u64 = (0..index.num_documents()).map(|d| index.doc_length(d)).sum();
        prop_assert_eq!(lengths, total);
        for term in index.terms() {
            let df = index.document_frequency(term).unwrap();
            prop_assert!(df >= 1 && df <= index.num_documents());
        }
    }

    #[test]
    fn shard_order_does_not_matter(corpus in corpus_strategy(), cut in 0usize..60, seed in any::<u64>()) {
        let whole = compute_all_stats(&build_index(&corpus).unwrap());
        let cut = cut.min(corpus.len());
        let mut shuffled = corpus.clone();
        let n = shuffled.len();
        shuffled.rotate_left((seed as usize) % n);
        let mut left = IndexBuilder::new();
        let mut right = IndexBuilder::new();
        for (i, s) in shuffled.iter().enumerate() {
            if i < cut { left.add_sequence(s) } else { right.add_sequence(s) }
        }
        let merged = compute_all_stats(&right.merge(left).finish().unwrap());
        prop_assert_eq!(merged, whole);
    }

    #[test]
    fn tfidf_is_scale_invariant(corpus in corpus_strategy()) {
        let doubled: Vec<TokenSequence> = corpus
            .iter()
            .map(|s| TokenSequence::new(s.doc_id.clone(), s.tokens.iter().chain(&s.tokens).cloned().collect()))
            .collect();
        let a = compute_all_stats(&build_index(&corpus).unwrap());
        let b = compute_all_stats(&build_index(&doubled).unwrap());
        for (x, y) in a.rows().iter().zip(b.rows()) {
            prop_assert!((x.tfidf - y.tfidf).abs() <= 1e-12 * x.tfidf.max(1.0));
        }
    }

    #[test]
    fn filtering_conserves_tokens(corpus in corpus_strategy(), drop in 0usize..30) {
        let index = build_index(&corpus).unwrap();
        let term = format!("w{drop}");
        let Ok(count) = index.term_count(&term) else { return Ok(()) };
        let stop: HashSet<String> = [term].into();
        match filter_vocabulary(&index, 1, &stop) {
            Ok(filtered) => prop_assert_eq!(filtered.total_tokens(), index.total_tokens() - count),
            Err(_) => prop_assert_eq!(index.total_tokens(), count),
        }
    }

    #[test]
    fn union_bounds_and_order_independence(corpus in corpus_strategy(), k in 1usize..10) {
        let table = compute_all_stats(&build_index(&corpus).unwrap());
        let set = select_candidates(&table, k).unwrap();
        prop_assert!(set.k <= set.len() && set.len() <= 4 * set.k);
        let mut lists: Vec<_> = Metric::ALL.iter().map(|&m| top_k(&rank_terms(&table, m), k).unwrap()).collect();
        lists.rotate_left(k % 4);
        prop_assert_eq!(&union_candidates(&table, &lists).unwrap(), &set);
        for c in set.entries() {
            let row = table.get(&c.term).unwrap();
            prop_assert!(Metric::ALL.iter().any(|&m| c.in_top_k[m.index()] && c.rank(m) <= set.k));
            prop_assert!(row.count >= 1);
        }
    }

    #[test]
    fn phrasing_conserves_tokens(corpus in corpus_strategy()) {
        let config = PhrasePassConfig { delta: 1.0, thresholds: vec![1.0, 0.5] };
        let out = detect_phrases(&corpus, &config).unwrap();
        let before: Vec<&str> = corpus.iter().flat_map(|s| s.tokens.iter().map(String::as_str)).collect();
        let after: Vec<&str> = out.iter().flat_map(|s| s.tokens.iter().flat_map(|t| t.split('_'))).collect();
        prop_assert_eq!(before, after);
        let stop: HashSet<String> = ["w0".to_string(), "w1".to_string()].into();
        let split = split_stopword_phrases(&out, &stop);
        for tok in split.iter().flat_map(|s| &s.tokens).filter(|t| t.contains('_')) {
            let parts: Vec<&str> = tok.split('_').collect();
            prop_assert!(!stop.contains(parts[0]) && !stop.contains(parts[parts.len() - 1]));
        }
    }

    #[test]
    fn merge_is_idempotent_and_sorted(terms in prop::collection::vec("[a-cA-C]{1,3}", 0..20)) {
        let list = StopwordList::new("x", SourceTag::Study, &terms);
        let merged = merge_lists(&[list.clone(), list.clone()]);
        prop_assert_eq!(merged.entries(), list.entries());
        let out: Vec<&str> = merged.terms().collect();
        prop_assert!(out.windows(2).all(|w| w[0] < w[1]));
    }
}
