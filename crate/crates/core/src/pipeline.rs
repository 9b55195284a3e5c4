//! End-to-end composition of the stages and their file artifacts.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{tokenize_documents, Document, TokenSequence};
use crate::lemma::lemmatize_corpus;
use crate::lists::{is_stopword, resolve_lists, ListError};
use crate::phrase::{apply_phrase_pass, count_ngrams, is_phrase, split_stopword_phrases, PhraseError, PhrasePassConfig};
use crate::rank::{select_candidates, CandidateSet, Metric, RankError};
use crate::report::{distribution_report, write_rank_frequency, Caps, ReportError};
use crate::stats::{build_index, compute_all_stats, filter_vocabulary, StatsError, StatsTable, TermDocumentIndex};
use crate::tsv::data_error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("the input contains no tokens")]
    EmptyInput,
    #[error("phrase detection: {0}")]
    Phrase(#[from] PhraseError),
    #[error("statistics: {0}")]
    Stats(#[from] StatsError),
    #[error("ranking: {0}")]
    Rank(#[from] RankError),
    #[error("report: {0}")]
    Report(#[from] ReportError),
    #[error("stopword lists: {0}")]
    List(#[from] ListError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub delta: f64,
    pub thresholds: Vec<f64>,
    pub min_count: u64,
    pub k: usize,
    /// Lists removed before statistics and used to split phrases.
    pub lists: Vec<String>,
    pub bins: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let phrase = PhrasePassConfig::default();
        PipelineConfig {
            delta: phrase.delta,
            thresholds: phrase.thresholds,
            min_count: 2,
            k: 2000,
            lists: vec!["nltk".into(), "uspto".into()],
            bins: 50,
        }
    }
}

impl PipelineConfig {
    pub fn phrase_config(&self) -> PhrasePassConfig {
        PhrasePassConfig {
            delta: self.delta,
            thresholds: self.thresholds.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.phrase_config()
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.min_count == 0 {
            return Err(PipelineError::Config("min_count must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(PipelineError::Config("k must be at least 1".into()));
        }
        if self.bins == 0 {
            return Err(PipelineError::Config("bins must be at least 1".into()));
        }
        Ok(())
    }

    pub fn stoplist(&self) -> Result<HashSet<String>, PipelineError> {
        Ok(resolve_lists(&self.lists)?.term_set())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub stage: String,
    pub tokens: u64,
    pub vocabulary: usize,
    pub phrases: usize,
}

impl StageCounts {
    fn measure(stage: &str, corpus: &[TokenSequence]) -> Self {
        let vocab: BTreeSet<&str> = corpus.iter().flat_map(|s| s.tokens.iter().map(String::as_str)).collect();
        StageCounts {
            stage: stage.to_string(),
            tokens: corpus.iter().map(|s| s.tokens.len() as u64).sum(),
            phrases: vocab.iter().filter(|t| is_phrase(t)).count(),
            vocabulary: vocab.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub documents: usize,
    pub sentences: usize,
    pub delta: f64,
    pub thresholds: Vec<f64>,
    pub lists: Vec<String>,
    pub min_count: u64,
    /// Corpus size after each stage, in order.
    pub stages: Vec<StageCounts>,
    /// What statistics will see: the final corpus without listed terms,
    /// then also without terms rarer than `min_count`.
    pub projections: Vec<StageCounts>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    pub corpus: Vec<TokenSequence>,
    pub manifest: Manifest,
}

/// Tokenizes, phrases (one pass per threshold), splits stopwords off phrase
/// boundaries and lemmatizes.
pub fn preprocess(docs: &[Document], config: &PipelineConfig) -> Result<Preprocessed, PipelineError> {
    config.validate()?;
    let stoplist = config.stoplist()?;

    let mut corpus = tokenize_documents(docs);
    if corpus.is_empty() {
        return Err(PipelineError::EmptyInput);
    }
    let mut stages = vec![StageCounts::measure("tokenized", &corpus)];
    for (i, &threshold) in config.thresholds.iter().enumerate() {
        let counts = count_ngrams(&corpus)?;
        corpus = apply_phrase_pass(&corpus, &counts, threshold, config.delta);
        stages.push(StageCounts::measure(&format!("phrase_pass_{}", i + 1), &corpus));
    }
    corpus = split_stopword_phrases(&corpus, &stoplist);
    stages.push(StageCounts::measure("stopword_split", &corpus));
    corpus = lemmatize_corpus(&corpus);
    stages.push(StageCounts::measure("lemmatized", &corpus));

    let without_lists: Vec<TokenSequence> = corpus
        .iter()
        .map(|s| {
            let tokens = s.tokens.iter().filter(|t| !is_stopword(t, &stoplist)).cloned().collect();
            TokenSequence::new(s.doc_id.clone(), tokens)
        })
        .collect();
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for t in without_lists.iter().flat_map(|s| &s.tokens) {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let frequent: Vec<TokenSequence> = without_lists
        .iter()
        .map(|s| {
            let tokens = s.tokens.iter().filter(|t| counts[t.as_str()] >= config.min_count).cloned().collect();
            TokenSequence::new(s.doc_id.clone(), tokens)
        })
        .collect();
    let projections = vec![
        StageCounts::measure("stoplist_removed", &without_lists),
        StageCounts::measure("min_count", &frequent),
    ];

    Ok(Preprocessed {
        manifest: Manifest {
            documents: docs.len(),
            sentences: corpus.len(),
            delta: config.delta,
            thresholds: config.thresholds.clone(),
            lists: config.lists.clone(),
            min_count: config.min_count,
            stages,
            projections,
        },
        corpus,
    })
}

/// Builds the index over a preprocessed corpus, drops listed and rare
/// terms and computes every metric.
pub fn compute_stats(corpus: &[TokenSequence], config: &PipelineConfig) -> Result<(TermDocumentIndex, StatsTable), PipelineError> {
    config.validate()?;
    let index = build_index(corpus)?;
    let index = filter_vocabulary(&index, config.min_count, &config.stoplist()?)?;
    let table = compute_all_stats(&index);
    Ok((index, table))
}

pub fn rank(table: &StatsTable, config: &PipelineConfig) -> Result<CandidateSet, PipelineError> {
    Ok(select_candidates(table, config.k)?)
}

/// Every artifact of a full run, keyed by file name.
pub type Artifacts = BTreeMap<String, Vec<u8>>;

pub fn preprocess_artifacts(pre: &Preprocessed) -> io::Result<Artifacts> {
    let mut out = Artifacts::new();
    let mut buf = Vec::new();
    write_corpus_tsv(&pre.corpus, &mut buf)?;
    out.insert(CORPUS_TSV.into(), buf);
    let mut buf = Vec::new();
    write_line_sentences(&pre.corpus, &mut buf)?;
    out.insert(CORPUS_LINES.into(), buf);
    let mut buf = serde_json::to_vec_pretty(&pre.manifest).map_err(io::Error::other)?;
    buf.push(b'\n');
    out.insert(MANIFEST.into(), buf);
    Ok(out)
}

pub fn stats_artifacts(index: &TermDocumentIndex, table: &StatsTable, config: &PipelineConfig) -> Result<Artifacts, PipelineError> {
    let mut out = Artifacts::new();
    let mut buf = Vec::new();
    table.write_tsv(&mut buf).expect("in-memory write");
    out.insert(STATS_TSV.into(), buf);
    for metric in Metric::ALL {
        let hist = distribution_report(table, metric, config.bins, Caps::tail(metric))?;
        let mut buf = Vec::new();
        hist.write_tsv(&mut buf).expect("in-memory write");
        out.insert(histogram_name(metric), buf);
    }
    let mut buf = Vec::new();
    write_rank_frequency(&index.rank_frequency(), &mut buf).expect("in-memory write");
    out.insert(RANK_FREQUENCY.into(), buf);
    Ok(out)
}

pub fn candidate_artifacts(set: &CandidateSet) -> Artifacts {
    let mut buf = Vec::new();
    set.write_tsv(&mut buf).expect("in-memory write");
    Artifacts::from([(CANDIDATES_TSV.to_string(), buf)])
}

/// Runs preprocessing, statistics and ranking and returns every artifact.
pub fn run_all(docs: &[Document], config: &PipelineConfig) -> Result<Artifacts, PipelineError> {
    let pre = preprocess(docs, config)?;
    let (index, table) = compute_stats(&pre.corpus, config)?;
    let set = rank(&table, config)?;
    let mut out = preprocess_artifacts(&pre).expect("in-memory write");
    out.extend(stats_artifacts(&index, &table, config)?);
    out.extend(candidate_artifacts(&set));
    Ok(out)
}

pub const CORPUS_TSV: &str = "corpus.tsv";
pub const CORPUS_LINES: &str = "corpus.txt";
pub const MANIFEST: &str = "manifest.json";
pub const STATS_TSV: &str = "stats.tsv";
pub const RANK_FREQUENCY: &str = "rank_frequency.tsv";
pub const CANDIDATES_TSV: &str = "candidates.tsv";

pub fn histogram_name(metric: Metric) -> String {
    format!("histogram_{}.tsv", metric.name())
}

/// One sentence per line as `doc_id<TAB>space-joined tokens`.
pub fn write_corpus_tsv<W: Write>(corpus: &[TokenSequence], mut out: W) -> io::Result<()> {
    for seq in corpus {
        writeln!(out, "{}\t{}", seq.doc_id, seq.tokens.join(" "))?;
    }
    Ok(())
}

pub fn read_corpus_tsv<R: BufRead>(input: R) -> io::Result<Vec<TokenSequence>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (doc, tokens) = line
            .split_once('\t')
            .ok_or_else(|| data_error(i + 1, "expected doc_id<TAB>tokens"))?;
        if doc.is_empty() {
            return Err(data_error(i + 1, "empty doc_id"));
        }
        out.push(TokenSequence::new(doc, tokens.split(' ').filter(|t| !t.is_empty()).map(String::from).collect()));
    }
    Ok(out)
}

/// One sentence per line, tokens separated by single spaces.
pub fn write_line_sentences<W: Write>(corpus: &[TokenSequence], mut out: W) -> io::Result<()> {
    for seq in corpus {
        writeln!(out, "{}", seq.tokens.join(" "))?;
    }
    Ok(())
}
