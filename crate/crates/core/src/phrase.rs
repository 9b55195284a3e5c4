//! Collocation detection with a discounted co-occurrence score.
//!
//! A bigram `(a, b)` scores `(count(a b) - delta) * N / (count(a) * count(b))`,
//! where `N` is the total token count. Adjacent pairs scoring strictly above a
//! pass threshold are joined into one `a_b` token. Running several passes with
//! decreasing thresholds lets joined tokens combine again, so two passes yield
//! terms of up to four words.

use std::collections::{HashMap, HashSet};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::TokenSequence;
use crate::par;

pub const PHRASE_JOINER: char = '_';

#[derive(Debug, Error, PartialEq)]
pub enum PhraseError {
    #[error("cannot count n-grams of an empty corpus")]
    EmptyCorpus,
    #[error("term {0:?} does not occur in the counted corpus")]
    UnknownTerm(String),
    #[error("invalid phrase configuration: {0}")]
    InvalidConfig(String),
}

/// Unigram and within-sentence bigram counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NgramCounts {
    unigrams: HashMap<String, u64>,
    // first word -> second word -> count
    bigrams: HashMap<String, HashMap<String, u64>>,
    total_tokens: u64,
}

impl NgramCounts {
    pub fn unigram(&self, term: &str) -> Option<u64> {
        self.unigrams.get(term).copied()
    }

    /// Count of the ordered pair; 0 when never seen.
    pub fn bigram(&self, first: &str, second: &str) -> u64 {
        self.bigrams
            .get(first)
            .and_then(|m| m.get(second))
            .copied()
            .unwrap_or(0)
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn vocabulary_size(&self) -> usize {
        self.unigrams.len()
    }

    pub fn bigram_types(&self) -> usize {
        self.bigrams.values().map(HashMap::len).sum()
    }

    pub fn unigrams(&self) -> impl Iterator<Item = (&str, u64)> {
        self.unigrams.iter().map(|(t, &c)| (t.as_str(), c))
    }

    pub fn bigrams(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.bigrams
            .iter()
            .flat_map(|(a, m)| m.iter().map(move |(b, &c)| (a.as_str(), b.as_str(), c)))
    }

    fn add_sequence(&mut self, tokens: &[String]) {
        for tok in tokens {
            *self.unigrams.entry(tok.clone()).or_insert(0) += 1;
        }
        for pair in tokens.windows(2) {
            *self
                .bigrams
                .entry(pair[0].clone())
                .or_default()
                .entry(pair[1].clone())
                .or_insert(0) += 1;
        }
        self.total_tokens += tokens.len() as u64;
    }

    /// Adds `other` into `self`. Integer addition, so the result does not
    /// depend on merge order.
    pub fn merge(mut self, mut other: NgramCounts) -> NgramCounts {
        if self.unigrams.len() < other.unigrams.len() {
            std::mem::swap(&mut self, &mut other);
        }
        for (term, c) in other.unigrams {
            *self.unigrams.entry(term).or_insert(0) += c;
        }
        for (first, inner) in other.bigrams {
            let slot = self.bigrams.entry(first).or_default();
            for (second, c) in inner {
                *slot.entry(second).or_insert(0) += c;
            }
        }
        self.total_tokens += other.total_tokens;
        self
    }

    /// Writes `term<TAB>count` rows: unigrams first, then bigrams with the
    /// two words separated by a space, each block sorted by term.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut uni: Vec<_> = self.unigrams().collect();
        uni.sort_unstable();
        for (t, c) in uni {
            writeln!(out, "{t}\t{c}")?;
        }
        let mut bi: Vec<_> = self.bigrams().collect();
        bi.sort_unstable();
        for (a, b, c) in bi {
            writeln!(out, "{a} {b}\t{c}")?;
        }
        Ok(())
    }
}

/// Counts unigrams and bigrams. Bigrams never span two sentences.
pub fn count_ngrams(corpus: &[TokenSequence]) -> Result<NgramCounts, PhraseError> {
    let counts = par::fold_reduce(
        corpus,
        NgramCounts::default,
        |mut acc, seq| {
            acc.add_sequence(&seq.tokens);
            acc
        },
        NgramCounts::merge,
    );
    if counts.total_tokens == 0 {
        return Err(PhraseError::EmptyCorpus);
    }
    Ok(counts)
}

pub fn score_bigram(counts: &NgramCounts, first: &str, second: &str, delta: f64) -> Result<f64, PhraseError> {
    let ci = counts
        .unigram(first)
        .ok_or_else(|| PhraseError::UnknownTerm(first.to_string()))?;
    let cj = counts
        .unigram(second)
        .ok_or_else(|| PhraseError::UnknownTerm(second.to_string()))?;
    Ok(raw_score(counts.bigram(first, second), ci, cj, counts.total_tokens, delta))
}

#[inline]
fn raw_score(pair: u64, ci: u64, cj: u64, total: u64, delta: f64) -> f64 {
    (pair as f64 - delta) * total as f64 / (ci as f64 * cj as f64)
}

fn joins(counts: &NgramCounts, first: &str, second: &str, threshold: f64, delta: f64) -> bool {
    // terms absent from the counts never join
    score_bigram(counts, first, second, delta).is_ok_and(|s| s > threshold)
}

/// Greedy left-to-right joining of one token list.
pub fn join_tokens(tokens: &[String], counts: &NgramCounts, threshold: f64, delta: f64) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        if i + 1 < tokens.len() && joins(counts, &tokens[i], &tokens[i + 1], threshold, delta) {
            out.push(format!("{}{PHRASE_JOINER}{}", tokens[i], tokens[i + 1]));
            i += 2;
        } else {
            out.push(tokens[i].clone());
            i += 1;
        }
    }
    out
}

pub fn apply_phrase_pass(
    corpus: &[TokenSequence],
    counts: &NgramCounts,
    threshold: f64,
    delta: f64,
) -> Vec<TokenSequence> {
    par::map(corpus, |seq| {
        TokenSequence::new(seq.doc_id.clone(), join_tokens(&seq.tokens, counts, threshold, delta))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhrasePassConfig {
    pub delta: f64,
    pub thresholds: Vec<f64>,
}

impl Default for PhrasePassConfig {
    fn default() -> Self {
        PhrasePassConfig {
            delta: 1.0,
            thresholds: vec![5.0, 2.5],
        }
    }
}

impl PhrasePassConfig {
    pub fn validate(&self) -> Result<(), PhraseError> {
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(PhraseError::InvalidConfig(format!("delta must be >= 0, got {}", self.delta)));
        }
        if self.thresholds.is_empty() {
            return Err(PhraseError::InvalidConfig("at least one threshold is required".into()));
        }
        if self.thresholds.iter().any(|t| t.is_nan()) {
            return Err(PhraseError::InvalidConfig("thresholds must be numbers".into()));
        }
        if self.thresholds.windows(2).any(|w| w[1] >= w[0]) {
            return Err(PhraseError::InvalidConfig(format!(
                "thresholds must be strictly decreasing, got {:?}",
                self.thresholds
            )));
        }
        Ok(())
    }
}

/// Outcome of one phrasing pass, kept for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct PassSummary {
    pub threshold: f64,
    pub vocabulary_before: usize,
    pub joins: u64,
}

/// Runs one pass per threshold, recounting over the joined corpus before each.
pub fn detect_phrases(
    corpus: &[TokenSequence],
    config: &PhrasePassConfig,
) -> Result<Vec<TokenSequence>, PhraseError> {
    detect_phrases_with_summary(corpus, config).map(|(out, _)| out)
}

pub fn detect_phrases_with_summary(
    corpus: &[TokenSequence],
    config: &PhrasePassConfig,
) -> Result<(Vec<TokenSequence>, Vec<PassSummary>), PhraseError> {
    config.validate()?;
    let mut current = corpus.to_vec();
    let mut summaries = Vec::with_capacity(config.thresholds.len());
    for &threshold in &config.thresholds {
        let counts = count_ngrams(&current)?;
        let next = apply_phrase_pass(&current, &counts, threshold, config.delta);
        let before: usize = current.iter().map(TokenSequence::len).sum();
        let after: usize = next.iter().map(TokenSequence::len).sum();
        summaries.push(PassSummary {
            threshold,
            vocabulary_before: counts.vocabulary_size(),
            joins: (before - after) as u64,
        });
        current = next;
    }
    Ok((current, summaries))
}

pub fn is_phrase(token: &str) -> bool {
    token.contains(PHRASE_JOINER)
}

/// Detaches stopword components from both ends of a phrase token.
///
/// `an_internal_combustion_engine` becomes `an`, `internal_combustion_engine`.
/// Interior stopwords stay (`state_of_the_art` is untouched). Non-phrase
/// tokens are returned as they are.
pub fn split_phrase(token: &str, stoplist: &HashSet<String>) -> Vec<String> {
    if !is_phrase(token) {
        return vec![token.to_string()];
    }
    let parts: Vec<&str> = token.split(PHRASE_JOINER).collect();
    let mut lo = 0;
    let mut hi = parts.len();
    while lo < hi && stoplist.contains(parts[lo]) {
        lo += 1;
    }
    while hi > lo && stoplist.contains(parts[hi - 1]) {
        hi -= 1;
    }
    if lo == 0 && hi == parts.len() {
        return vec![token.to_string()];
    }
    let mut out: Vec<String> = parts[..lo].iter().map(|s| s.to_string()).collect();
    if lo < hi {
        out.push(parts[lo..hi].join("_"));
    }
    out.extend(parts[hi..].iter().map(|s| s.to_string()));
    out.retain(|s| !s.is_empty());
    out
}

pub fn split_stopword_phrases(corpus: &[TokenSequence], stoplist: &HashSet<String>) -> Vec<TokenSequence> {
    par::map(corpus, |seq| {
        let tokens = seq.tokens.iter().flat_map(|t| split_phrase(t, stoplist)).collect();
        TokenSequence::new(seq.doc_id.clone(), tokens)
    })
}

/// Vocabulary form of [`split_stopword_phrases`].
pub fn split_vocabulary<'a, I>(terms: I, stoplist: &HashSet<String>) -> Vec<String>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut out: Vec<String> = terms.into_iter().flat_map(|t| split_phrase(t, stoplist)).collect();
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seqs(lines: &[&str]) -> Vec<TokenSequence> {
        lines
            .iter()
            .map(|l| TokenSequence::new("d", l.split_whitespace().map(String::from).collect()))
            .collect()
    }

    fn stopset(words: &[&str]) -> HashSet<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn counts_stay_within_sentences() {
        let c = count_ngrams(&seqs(&["a b", "b a"])).unwrap();
        assert_eq!(c.unigram("a"), Some(2));
        assert_eq!(c.unigram("b"), Some(2));
        assert_eq!(c.bigram("a", "b"), 1);
        assert_eq!(c.bigram("b", "a"), 1);
        assert_eq!(c.total_tokens(), 4);

        let c = count_ngrams(&seqs(&["x"])).unwrap();
        assert_eq!(c.bigram_types(), 0);
        assert_eq!(c.total_tokens(), 1);

        let c = count_ngrams(&seqs(&["a b", "c d"])).unwrap();
        assert_eq!(c.bigram("b", "c"), 0);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert_eq!(count_ngrams(&[]), Err(PhraseError::EmptyCorpus));
        assert_eq!(count_ngrams(&seqs(&[""])), Err(PhraseError::EmptyCorpus));
    }

    fn synthetic_counts(pair: u64, ci: u64, cj: u64, total: u64) -> NgramCounts {
        let mut c = NgramCounts::default();
        c.unigrams.insert("wi".into(), ci);
        c.unigrams.insert("wj".into(), cj);
        if pair > 0 {
            c.bigrams.entry("wi".into()).or_default().insert("wj".into(), pair);
        }
        c.total_tokens = total;
        c
    }

    #[test]
    fn score_matches_hand_evaluation() {
        let c = synthetic_counts(3, 4, 5, 100);
        assert_eq!(score_bigram(&c, "wi", "wj", 1.0).unwrap(), 10.0);
        // a pair seen once scores exactly zero with delta = 1
        let c = synthetic_counts(1, 7, 9, 1000);
        assert_eq!(score_bigram(&c, "wi", "wj", 1.0).unwrap(), 0.0);
        let c = synthetic_counts(0, 2, 2, 10);
        assert!(score_bigram(&c, "wi", "wj", 1.0).unwrap() < 0.0);
        assert_eq!(
            score_bigram(&c, "wi", "zz", 1.0),
            Err(PhraseError::UnknownTerm("zz".into()))
        );
    }

    #[test]
    fn pass_joins_pairs_above_threshold() {
        // deep learning x2, plus filler: count(deep)=2, count(learning)=2,
        // pair=2, N=13 -> score (2-1)*13/4 = 3.25
        let corpus = seqs(&["deep learning model", "deep learning", "a b c d e f g h"]);
        let counts = count_ngrams(&corpus).unwrap();
        let s = score_bigram(&counts, "deep", "learning", 1.0).unwrap();
        assert_eq!(s, 3.25);
        let out = apply_phrase_pass(&corpus, &counts, 3.0, 1.0);
        assert_eq!(out[0].tokens, vec!["deep_learning", "model"]);
        // same counts at a threshold the pair does not exceed: identity
        let out = apply_phrase_pass(&corpus, &counts, 3.25, 1.0);
        assert_eq!(out, corpus);
    }

    #[test]
    fn overlapping_joins_are_greedy() {
        let corpus = seqs(&["a b c", "a b c", "a b c"]);
        let counts = count_ngrams(&corpus).unwrap();
        assert!(score_bigram(&counts, "a", "b", 1.0).unwrap() > 0.5);
        assert!(score_bigram(&counts, "b", "c", 1.0).unwrap() > 0.5);
        let out = apply_phrase_pass(&corpus, &counts, 0.5, 1.0);
        assert_eq!(out[0].tokens, vec!["a_b", "c"]);
    }

    #[test]
    fn second_pass_builds_longer_phrases() {
        // N = 62: pass 1 scores (8-1)*62/(8*8) = 6.78 > 5; pass 2 recounts
        // N = 54 and scores (4-1)*54/(8*5) = 4.05 > 2.5
        let filler: Vec<String> = (0..4)
            .map(|i| (0..10).map(|j| format!("f{}", i * 10 + j)).collect::<Vec<_>>().join(" "))
            .collect();
        let mut lines = vec!["autonomous vehicle platooning"; 4];
        lines.extend(["autonomous vehicle"; 4]);
        lines.extend(filler.iter().map(String::as_str));
        lines.push("platooning trucks");
        let out = detect_phrases(&seqs(&lines), &PhrasePassConfig::default()).unwrap();
        assert_eq!(out[0].tokens, vec!["autonomous_vehicle_platooning"]);
        assert_eq!(out[4].tokens, vec!["autonomous_vehicle"]);
    }

    #[test]
    fn all_singleton_bigrams_leave_corpus_unchanged() {
        let corpus = seqs(&["a b c d", "e f g h"]);
        assert_eq!(detect_phrases(&corpus, &PhrasePassConfig::default()).unwrap(), corpus);
    }

    #[test]
    fn config_validation() {
        assert!(PhrasePassConfig::default().validate().is_ok());
        let bad = PhrasePassConfig { delta: 1.0, thresholds: vec![2.5, 5.0] };
        assert!(bad.validate().is_err());
        let bad = PhrasePassConfig { delta: -1.0, thresholds: vec![5.0] };
        assert!(bad.validate().is_err());
        let bad = PhrasePassConfig { delta: 1.0, thresholds: vec![] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn stopwords_are_split_from_phrase_boundaries() {
        let stop = stopset(&["an", "of", "the", "a"]);
        assert_eq!(
            split_phrase("an_internal_combustion_engine", &stop),
            vec!["an", "internal_combustion_engine"]
        );
        assert_eq!(split_phrase("state_of_the_art", &stop), vec!["state_of_the_art"]);
        assert_eq!(split_phrase("the_a", &stop), vec!["the", "a"]);
        assert_eq!(split_phrase("the_engine_of", &stop), vec!["the", "engine", "of"]);
        assert_eq!(split_phrase("the", &stop), vec!["the"]);
    }

    #[test]
    fn ngram_tsv_is_sorted() {
        let c = count_ngrams(&seqs(&["b a", "a b"])).unwrap();
        let mut buf = Vec::new();
        c.write_tsv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a\t2\nb\t2\na b\t1\nb a\t1\n");
    }
}
