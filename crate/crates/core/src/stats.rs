//! Term–document index and the four ranking metrics.
//!
//! With `n(t,p)` the count of term `t` in document `p`, `n(p)` the document
//! length, `N` the corpus token total, `|C|` the number of documents and
//! `DF(t)` the number of documents containing `t`:
//!
//! * `tf(t)      = n(t) / N`
//! * `idf(t)     = ln(|C| / DF(t))`
//! * `tfidf(t)   = (1 / DF(t)) * sum_p (n(t,p) / n(p)) * (|C| / DF(t))`
//! * `entropy(t) = -sum_p P(p|t) ln P(p|t)` with `P(p|t) = n(t,p) / n(t)`
//!
//! All logarithms are natural. The index is canonical: documents and terms
//! are sorted, so statistics are bitwise identical however the input was
//! sharded or ordered.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::{DefaultHasher, Hash, Hasher};
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::TokenSequence;
use crate::par;
use crate::tsv::{data_error, format_sig};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("the corpus contains no tokens")]
    EmptyCorpus,
    #[error("term {0:?} is not in the index")]
    UnknownTerm(String),
    #[error("min_count must be at least 1")]
    InvalidMinCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub count: u64,
}

/// Accumulates per-document term counts. Builders over disjoint or
/// overlapping shards can be merged in any order.
#[derive(Debug, Clone, Default)]
pub struct IndexBuilder {
    docs: HashMap<String, HashMap<String, u64>>,
}

impl IndexBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_tokens<'a, I>(&mut self, doc_id: &str, tokens: I)
    where
        I: IntoIterator<Item = &'a String>,
    {
        let doc = match self.docs.get_mut(doc_id) {
            Some(doc) => doc,
            None => self.docs.entry(doc_id.to_string()).or_default(),
        };
        for tok in tokens {
            *doc.entry(tok.clone()).or_insert(0) += 1;
        }
    }

    pub fn add_sequence(&mut self, seq: &TokenSequence) {
        self.add_tokens(&seq.doc_id, &seq.tokens);
    }

    pub fn merge(mut self, mut other: IndexBuilder) -> IndexBuilder {
        if self.docs.len() < other.docs.len() {
            std::mem::swap(&mut self, &mut other);
        }
        for (doc_id, counts) in other.docs {
            let slot = self.docs.entry(doc_id).or_default();
            for (term, c) in counts {
                *slot.entry(term).or_insert(0) += c;
            }
        }
        self
    }

    pub fn finish(self) -> Result<TermDocumentIndex, StatsError> {
        let mut docs: Vec<(String, HashMap<String, u64>)> =
            self.docs.into_iter().filter(|(_, counts)| !counts.is_empty()).collect();
        if docs.is_empty() {
            return Err(StatsError::EmptyCorpus);
        }
        docs.sort_unstable_by(|a, b| a.0.cmp(&b.0));

        let mut by_term: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_ids = Vec::with_capacity(docs.len());
        let mut doc_lengths = Vec::with_capacity(docs.len());
        for (idx, (doc_id, counts)) in docs.into_iter().enumerate() {
            doc_lengths.push(counts.values().sum());
            doc_ids.push(doc_id);
            for (term, count) in counts {
                by_term.entry(term).or_default().push(Posting { doc: idx as u32, count });
            }
        }
        let mut terms = Vec::with_capacity(by_term.len());
        let mut postings = Vec::with_capacity(by_term.len());
        for (term, list) in by_term {
            terms.push(term);
            postings.push(list);
        }
        Ok(TermDocumentIndex::from_parts(terms, postings, doc_ids, doc_lengths))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermDocumentIndex {
    terms: Vec<String>,
    postings: Vec<Vec<Posting>>,
    term_counts: Vec<u64>,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u64>,
    total_tokens: u64,
}

pub fn build_index(corpus: &[TokenSequence]) -> Result<TermDocumentIndex, StatsError> {
    par::fold_reduce(
        corpus,
        IndexBuilder::new,
        |mut b, seq| {
            b.add_sequence(seq);
            b
        },
        IndexBuilder::merge,
    )
    .finish()
}

impl TermDocumentIndex {
    fn from_parts(terms: Vec<String>, mut postings: Vec<Vec<Posting>>, doc_ids: Vec<String>, doc_lengths: Vec<u64>) -> Self {
        for list in &mut postings {
            list.sort_unstable_by_key(|p| p.doc);
        }
        let term_counts = postings.iter().map(|l| l.iter().map(|p| p.count).sum()).collect();
        let total_tokens = doc_lengths.iter().sum();
        TermDocumentIndex {
            terms,
            postings,
            term_counts,
            doc_ids,
            doc_lengths,
            total_tokens,
        }
    }

    pub fn num_documents(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn vocabulary_size(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_length(&self, doc: usize) -> u64 {
        self.doc_lengths[doc]
    }

    pub fn term_id(&self, term: &str) -> Result<usize, StatsError> {
        self.terms
            .binary_search_by(|t| t.as_str().cmp(term))
            .map_err(|_| StatsError::UnknownTerm(term.to_string()))
    }

    pub fn postings(&self, term: &str) -> Result<&[Posting], StatsError> {
        Ok(&self.postings[self.term_id(term)?])
    }

    /// `n(t, p)` by document id; 0 when the term is absent from it.
    pub fn count_in(&self, term: &str, doc_id: &str) -> Result<u64, StatsError> {
        let list = self.postings(term)?;
        let Ok(doc) = self.doc_ids.binary_search_by(|d| d.as_str().cmp(doc_id)) else {
            return Ok(0);
        };
        Ok(list
            .binary_search_by_key(&(doc as u32), |p| p.doc)
            .map(|i| list[i].count)
            .unwrap_or(0))
    }

    pub fn term_count(&self, term: &str) -> Result<u64, StatsError> {
        Ok(self.term_counts[self.term_id(term)?])
    }

    pub fn document_frequency(&self, term: &str) -> Result<usize, StatsError> {
        Ok(self.postings[self.term_id(term)?].len())
    }

    fn tf_of(&self, id: usize) -> f64 {
        self.term_counts[id] as f64 / self.total_tokens as f64
    }

    fn idf_of(&self, id: usize) -> f64 {
        let df = self.postings[id].len();
        if df == self.num_documents() {
            return 0.0;
        }
        (self.num_documents() as f64 / df as f64).ln()
    }

    fn tfidf_of(&self, id: usize) -> f64 {
        let list = &self.postings[id];
        let df = list.len() as f64;
        let share: f64 = list
            .iter()
            .map(|p| p.count as f64 / self.doc_lengths[p.doc as usize] as f64)
            .sum();
        share * self.num_documents() as f64 / (df * df)
    }

    fn entropy_of(&self, id: usize) -> f64 {
        let list = &self.postings[id];
        let n = list.len();
        if n <= 1 {
            return 0.0;
        }
        if list.iter().all(|p| p.count == list[0].count) {
            return (n as f64).ln();
        }
        // H = ln n(t) - (1/n(t)) * sum n ln n
        let total = self.term_counts[id] as f64;
        let weighted: f64 = list
            .iter()
            .map(|p| {
                let c = p.count as f64;
                c * c.ln()
            })
            .sum();
        let h = total.ln() - weighted / total;
        h.clamp(0.0, (self.num_documents() as f64).ln())
    }

    fn stats_of(&self, id: usize) -> TermStats {
        TermStats {
            term: self.terms[id].clone(),
            count: self.term_counts[id],
            df: self.postings[id].len() as u64,
            tf: self.tf_of(id),
            idf: self.idf_of(id),
            tfidf: self.tfidf_of(id),
            entropy: self.entropy_of(id),
        }
    }

    /// Rank–frequency rows: count descending, ties by term ascending.
    pub fn rank_frequency(&self) -> Vec<RankFrequencyRow> {
        let mut ids: Vec<usize> = (0..self.terms.len()).collect();
        ids.sort_by(|&a, &b| {
            self.term_counts[b]
                .cmp(&self.term_counts[a])
                .then_with(|| self.terms[a].cmp(&self.terms[b]))
        });
        ids.into_iter()
            .enumerate()
            .map(|(i, id)| RankFrequencyRow {
                rank: i + 1,
                term: self.terms[id].clone(),
                count: self.term_counts[id],
            })
            .collect()
    }
}

pub fn term_frequency(index: &TermDocumentIndex, term: &str) -> Result<f64, StatsError> {
    Ok(index.tf_of(index.term_id(term)?))
}

pub fn inverse_document_frequency(index: &TermDocumentIndex, term: &str) -> Result<f64, StatsError> {
    Ok(index.idf_of(index.term_id(term)?))
}

pub fn tfidf(index: &TermDocumentIndex, term: &str) -> Result<f64, StatsError> {
    Ok(index.tfidf_of(index.term_id(term)?))
}

pub fn entropy(index: &TermDocumentIndex, term: &str) -> Result<f64, StatsError> {
    Ok(index.entropy_of(index.term_id(term)?))
}

pub fn rank_frequency_table(index: &TermDocumentIndex) -> Vec<RankFrequencyRow> {
    index.rank_frequency()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankFrequencyRow {
    pub rank: usize,
    pub term: String,
    pub count: u64,
}

/// Drops terms rarer than `min_count` or listed in `stoplist`, then
/// recomputes document lengths, `N` and `|C|` over what is left. A stoplist
/// entry with spaces ("vice versa") also matches the joined phrase token.
pub fn filter_vocabulary(
    index: &TermDocumentIndex,
    min_count: u64,
    stoplist: &HashSet<String>,
) -> Result<TermDocumentIndex, StatsError> {
    if min_count == 0 {
        return Err(StatsError::InvalidMinCount);
    }
    let stopped = |term: &str| stoplist.contains(term) || (term.contains('_') && stoplist.contains(&term.replace('_', " ")));
    let keep: Vec<usize> = (0..index.terms.len())
        .filter(|&id| index.term_counts[id] >= min_count && !stopped(&index.terms[id]))
        .collect();

    let mut lengths = vec![0u64; index.num_documents()];
    for &id in &keep {
        for p in &index.postings[id] {
            lengths[p.doc as usize] += p.count;
        }
    }
    // renumber the surviving documents, preserving their sorted order
    let mut remap = vec![u32::MAX; lengths.len()];
    let mut doc_ids = Vec::new();
    let mut doc_lengths = Vec::new();
    for (old, &len) in lengths.iter().enumerate() {
        if len > 0 {
            remap[old] = doc_ids.len() as u32;
            doc_ids.push(index.doc_ids[old].clone());
            doc_lengths.push(len);
        }
    }
    if doc_ids.is_empty() {
        return Err(StatsError::EmptyCorpus);
    }
    let terms = keep.iter().map(|&id| index.terms[id].clone()).collect();
    let postings = keep
        .iter()
        .map(|&id| {
            index.postings[id]
                .iter()
                .map(|p| Posting {
                    doc: remap[p.doc as usize],
                    count: p.count,
                })
                .collect()
        })
        .collect();
    Ok(TermDocumentIndex::from_parts(terms, postings, doc_ids, doc_lengths))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermStats {
    pub term: String,
    pub count: u64,
    pub df: u64,
    pub tf: f64,
    pub idf: f64,
    pub tfidf: f64,
    pub entropy: f64,
}

/// One [`TermStats`] row per vocabulary term, sorted by term.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsTable {
    rows: Vec<TermStats>,
    num_documents: usize,
}

pub fn compute_all_stats(index: &TermDocumentIndex) -> StatsTable {
    let ids: Vec<usize> = (0..index.vocabulary_size()).collect();
    StatsTable {
        rows: par::map(&ids, |&id| index.stats_of(id)),
        num_documents: index.num_documents(),
    }
}

pub const STATS_HEADER: &str = "term\tcount\tdf\ttf\tidf\ttfidf\tentropy";

impl StatsTable {
    pub fn new(mut rows: Vec<TermStats>, num_documents: usize) -> Self {
        rows.sort_by(|a, b| a.term.cmp(&b.term));
        StatsTable { rows, num_documents }
    }

    pub fn rows(&self) -> &[TermStats] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn num_documents(&self) -> usize {
        self.num_documents
    }

    pub fn get(&self, term: &str) -> Option<&TermStats> {
        self.rows
            .binary_search_by(|r| r.term.as_str().cmp(term))
            .ok()
            .map(|i| &self.rows[i])
    }

    /// Identity of the table's contents, used to reject rankings that were
    /// derived from different tables.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.num_documents.hash(&mut h);
        for r in &self.rows {
            r.term.hash(&mut h);
            r.count.hash(&mut h);
            r.df.hash(&mut h);
            for v in [r.tf, r.idf, r.tfidf, r.entropy] {
                v.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }

    /// Writes the header and one row per term; floats carry 12 significant
    /// digits. The document count goes in a leading `#` comment.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# documents: {}", self.num_documents)?;
        writeln!(out, "{STATS_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.term,
                r.count,
                r.df,
                format_sig(r.tf, 12),
                format_sig(r.idf, 12),
                format_sig(r.tfidf, 12),
                format_sig(r.entropy, 12)
            )?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(input: R) -> io::Result<StatsTable> {
        let mut rows = Vec::new();
        let mut num_documents = None;
        let mut saw_header = false;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line_no = i + 1;
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(n) = comment.trim().strip_prefix("documents:") {
                    num_documents = Some(n.trim().parse().map_err(|_| data_error(line_no, "bad document count"))?);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            if !saw_header {
                if line != STATS_HEADER {
                    return Err(data_error(line_no, format!("expected header {STATS_HEADER:?}")));
                }
                saw_header = true;
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 7 {
                return Err(data_error(line_no, format!("expected 7 columns, found {}", cols.len())));
            }
            let int = |s: &str| s.parse::<u64>().map_err(|_| data_error(line_no, format!("bad integer {s:?}")));
            let float = |s: &str| s.parse::<f64>().map_err(|_| data_error(line_no, format!("bad number {s:?}")));
            rows.push(TermStats {
                term: cols[0].to_string(),
                count: int(cols[1])?,
                df: int(cols[2])?,
                tf: float(cols[3])?,
                idf: float(cols[4])?,
                tfidf: float(cols[5])?,
                entropy: float(cols[6])?,
            });
        }
        if !saw_header {
            return Err(data_error(0, "missing header"));
        }
        let num_documents = num_documents.unwrap_or_else(|| rows.iter().map(|r| r.df as usize).max().unwrap_or(0));
        Ok(StatsTable::new(rows, num_documents))
    }
}
