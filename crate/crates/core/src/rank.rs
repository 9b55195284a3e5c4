//! Per-metric orderings, top-k cuts and the candidate union.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{StatsTable, TermStats};
use crate::tsv::data_error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Tf,
    Idf,
    Tfidf,
    Entropy,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Tf, Metric::Idf, Metric::Tfidf, Metric::Entropy];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Tf => "tf",
            Metric::Idf => "idf",
            Metric::Tfidf => "tfidf",
            Metric::Entropy => "entropy",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn value(self, row: &TermStats) -> f64 {
        match self {
            Metric::Tf => row.tf,
            Metric::Idf => row.idf,
            Metric::Tfidf => row.tfidf,
            Metric::Entropy => row.entropy,
        }
    }

    /// Stopword-like terms have high tf and entropy but low idf and tfidf.
    pub fn descending(self) -> bool {
        matches!(self, Metric::Tf | Metric::Entropy)
    }

    fn compare(self, a: &TermStats, b: &TermStats) -> Ordering {
        let by_value = self.value(a).total_cmp(&self.value(b));
        let by_value = if self.descending() { by_value.reverse() } else { by_value };
        by_value.then_with(|| a.term.cmp(&b.term))
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = RankError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| RankError::UnknownMetric(s.to_string()))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RankError {
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("the stats table is empty")]
    EmptyStats,
    #[error("ranking for {0} was computed from a different stats table")]
    SourceMismatch(Metric),
    #[error("expected one top-k list per metric, {0}")]
    MetricSet(String),
    #[error("top-k lists disagree on k ({0} vs {1})")]
    InconsistentK(usize, usize),
}

/// Terms of one stats table ordered by one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub metric: Metric,
    pub source: u64,
    pub k: Option<usize>,
    pub terms: Vec<String>,
}

pub fn rank_terms(stats: &StatsTable, metric: Metric) -> Ranking {
    let mut rows: Vec<&TermStats> = stats.rows().iter().collect();
    rows.sort_unstable_by(|a, b| metric.compare(a, b));
    Ranking {
        metric,
        source: stats.fingerprint(),
        k: None,
        terms: rows.into_iter().map(|r| r.term.clone()).collect(),
    }
}

/// The first `min(k, len)` terms; the effective cut is recorded as `k`.
pub fn top_k(ranking: &Ranking, k: usize) -> Result<Ranking, RankError> {
    if k == 0 {
        return Err(RankError::InvalidK);
    }
    Ok(Ranking {
        metric: ranking.metric,
        source: ranking.source,
        k: Some(k.min(ranking.terms.len())),
        terms: ranking.terms.iter().take(k).cloned().collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub term: String,
    /// 1-based position in each metric's full ordering, indexed by [`Metric::index`].
    pub ranks: [usize; 4],
    pub in_top_k: [bool; 4],
}

impl Candidate {
    pub fn rank(&self, metric: Metric) -> usize {
        self.ranks[metric.index()]
    }

    pub fn best_rank(&self) -> usize {
        self.ranks.iter().copied().min().unwrap_or(usize::MAX)
    }

    pub fn sources(&self) -> Vec<Metric> {
        Metric::ALL.into_iter().filter(|m| self.in_top_k[m.index()]).collect()
    }

    pub fn sources_field(&self) -> String {
        self.sources().iter().map(|m| m.name()).collect::<Vec<_>>().join(";")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub k: usize,
    entries: Vec<Candidate>,
}

/// Unions four top-k lists of `stats`, one per metric, in any order.
pub fn union_candidates(stats: &StatsTable, lists: &[Ranking]) -> Result<CandidateSet, RankError> {
    if stats.is_empty() {
        return Err(RankError::EmptyStats);
    }
    let fingerprint = stats.fingerprint();
    let mut by_metric: [Option<&Ranking>; 4] = [None; 4];
    let mut k = None;
    for list in lists {
        if list.source != fingerprint {
            return Err(RankError::SourceMismatch(list.metric));
        }
        let slot = &mut by_metric[list.metric.index()];
        if slot.is_some() {
            return Err(RankError::MetricSet(format!("{} given twice", list.metric)));
        }
        *slot = Some(list);
        let list_k = list.k.unwrap_or(list.terms.len());
        match k {
            Some(prev) if prev != list_k => return Err(RankError::InconsistentK(prev, list_k)),
            _ => k = Some(list_k),
        }
    }
    if let Some(missing) = Metric::ALL.into_iter().find(|m| by_metric[m.index()].is_none()) {
        return Err(RankError::MetricSet(format!("{missing} missing")));
    }
    let k = k.ok_or(RankError::InvalidK)?;

    let mut members: BTreeMap<&str, [bool; 4]> = BTreeMap::new();
    for metric in Metric::ALL {
        for term in &by_metric[metric.index()].expect("checked above").terms {
            members.entry(term).or_default()[metric.index()] = true;
        }
    }
    let positions: Vec<std::collections::HashMap<&str, usize>> = Metric::ALL
        .iter()
        .map(|&m| {
            let full = rank_terms(stats, m);
            let mut pos = std::collections::HashMap::with_capacity(members.len());
            for (i, term) in full.terms.iter().enumerate() {
                if let Some((key, _)) = members.get_key_value(term.as_str()) {
                    pos.insert(*key, i + 1);
                }
            }
            pos
        })
        .collect();

    let entries = members
        .into_iter()
        .map(|(term, in_top_k)| Candidate {
            term: term.to_string(),
            ranks: std::array::from_fn(|i| positions[i][term]),
            in_top_k,
        })
        .collect();
    Ok(CandidateSet::new(k, entries))
}

/// Ranks `stats` by all four metrics and unions the top `k` of each.
pub fn select_candidates(stats: &StatsTable, k: usize) -> Result<CandidateSet, RankError> {
    let lists = Metric::ALL
        .into_iter()
        .map(|m| top_k(&rank_terms(stats, m), k))
        .collect::<Result<Vec<_>, _>>()?;
    union_candidates(stats, &lists)
}

pub const CANDIDATE_HEADER: &str = "term\trank_tf\trank_idf\trank_tfidf\trank_entropy\tsources";

impl CandidateSet {
    /// Sorts entries by best rank, then term.
    pub fn new(k: usize, mut entries: Vec<Candidate>) -> Self {
        entries.sort_by(|a, b| a.best_rank().cmp(&b.best_rank()).then_with(|| a.term.cmp(&b.term)));
        CandidateSet { k, entries }
    }

    pub fn entries(&self) -> &[Candidate] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn terms(&self) -> Vec<String> {
        self.entries.iter().map(|c| c.term.clone()).collect()
    }

    pub fn get(&self, term: &str) -> Option<&Candidate> {
        self.entries.iter().find(|c| c.term == term)
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# k: {}", self.k)?;
        writeln!(out, "{CANDIDATE_HEADER}")?;
        for c in &self.entries {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                c.term,
                c.ranks[0],
                c.ranks[1],
                c.ranks[2],
                c.ranks[3],
                c.sources_field()
            )?;
        }
        Ok(())
    }

    /// Reads what [`CandidateSet::write_tsv`] writes. Without a `# k:`
    /// comment, k is taken as the largest rank that is flagged top-k.
    pub fn read_tsv<R: BufRead>(input: R) -> io::Result<CandidateSet> {
        let mut k = None;
        let mut saw_header = false;
        let mut entries = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line_no = i + 1;
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("k:") {
                    k = Some(v.trim().parse::<usize>().map_err(|_| data_error(line_no, "bad k"))?);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            if !saw_header {
                if line != CANDIDATE_HEADER {
                    return Err(data_error(line_no, format!("expected header {CANDIDATE_HEADER:?}")));
                }
                saw_header = true;
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 6 {
                return Err(data_error(line_no, format!("expected 6 columns, found {}", cols.len())));
            }
            let mut ranks = [0usize; 4];
            for (slot, col) in ranks.iter_mut().zip(&cols[1..5]) {
                *slot = col
                    .parse()
                    .ok()
                    .filter(|&r| r >= 1)
                    .ok_or_else(|| data_error(line_no, format!("bad rank {col:?}")))?;
            }
            let mut in_top_k = [false; 4];
            for name in cols[5].split(';').filter(|s| !s.is_empty()) {
                let metric: Metric = name.parse().map_err(|e: RankError| data_error(line_no, e.to_string()))?;
                in_top_k[metric.index()] = true;
            }
            if !in_top_k.contains(&true) {
                return Err(data_error(line_no, "candidate is not top-k in any metric"));
            }
            entries.push(Candidate {
                term: cols[0].to_string(),
                ranks,
                in_top_k,
            });
        }
        if !saw_header {
            return Err(data_error(0, "missing header"));
        }
        let k = k.unwrap_or_else(|| {
            entries
                .iter()
                .flat_map(|c| Metric::ALL.into_iter().filter(|m| c.in_top_k[m.index()]).map(|m| c.rank(m)))
                .max()
                .unwrap_or(1)
        });
        Ok(CandidateSet::new(k, entries))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(term: &str, tf: f64, idf: f64, tfidf: f64, entropy: f64) -> TermStats {
        TermStats {
            term: term.into(),
            count: 1,
            df: 1,
            tf,
            idf,
            tfidf,
            entropy,
        }
    }

    fn table(rows: Vec<TermStats>) -> StatsTable {
        StatsTable::new(rows, 10)
    }

    #[test]
    fn directions_and_ties() {
        let t = table(vec![row("a", 0.5, 0.0, 1.0, 0.1), row("b", 0.3, 2f64.ln(), 1.0, 0.9), row("c", 0.5, 0.0, 0.2, 0.9)]);
        assert_eq!(rank_terms(&t, Metric::Tf).terms, ["a", "c", "b"]);
        assert_eq!(rank_terms(&t, Metric::Idf).terms, ["a", "c", "b"]);
        assert_eq!(rank_terms(&t, Metric::Tfidf).terms, ["c", "a", "b"]);
        assert_eq!(rank_terms(&t, Metric::Entropy).terms, ["b", "c", "a"]);
    }

    #[test]
    fn top_k_truncates() {
        let t = table(vec![row("a", 0.3, 0.0, 0.0, 0.0), row("b", 0.2, 0.0, 0.0, 0.0), row("c", 0.1, 0.0, 0.0, 0.0)]);
        let r = rank_terms(&t, Metric::Tf);
        assert_eq!(top_k(&r, 2).unwrap().terms, ["a", "b"]);
        assert_eq!(top_k(&r, 10).unwrap().terms, ["a", "b", "c"]);
        assert_eq!(top_k(&r, 0), Err(RankError::InvalidK));
    }

    #[test]
    fn identical_orders_give_union_of_k() {
        // every metric ranks terms the same way
        let rows = (0..10)
            .map(|i| {
                let x = i as f64;
                row(&format!("t{i}"), 1.0 - x / 10.0, x, x, 10.0 - x)
            })
            .collect();
        let set = select_candidates(&table(rows), 3).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.entries()[0].sources_field(), "tf;idf;tfidf;entropy");
    }

    #[test]
    fn disjoint_orders_give_union_of_4k() {
        let rows = vec![
            row("a", 0.9, 5.0, 5.0, 0.0),
            row("b", 0.0, 0.0, 5.0, 0.0),
            row("c", 0.0, 5.0, 0.0, 0.0),
            row("d", 0.0, 5.0, 5.0, 0.9),
        ];
        let set = select_candidates(&table(rows), 1).unwrap();
        assert_eq!(set.len(), 4);
        let a = set.get("a").unwrap();
        assert_eq!(a.sources(), vec![Metric::Tf]);
        assert_eq!(a.rank(Metric::Tf), 1);
    }

    #[test]
    fn union_rejects_foreign_lists() {
        let t1 = table(vec![row("a", 0.5, 0.0, 1.0, 0.1)]);
        let t2 = table(vec![row("b", 0.5, 0.0, 1.0, 0.1)]);
        let mut lists: Vec<Ranking> = Metric::ALL.into_iter().map(|m| top_k(&rank_terms(&t1, m), 1).unwrap()).collect();
        lists[2] = top_k(&rank_terms(&t2, Metric::Tfidf), 1).unwrap();
        assert_eq!(union_candidates(&t1, &lists), Err(RankError::SourceMismatch(Metric::Tfidf)));
        assert!(matches!(union_candidates(&t1, &lists[..1]), Err(RankError::MetricSet(_))));
    }

    #[test]
    fn union_ignores_list_order() {
        let rows = (0..20)
            .map(|i| {
                let x = i as f64;
                row(&format!("t{i:02}"), (x * 7.0) % 11.0, (x * 3.0) % 5.0, (x * 13.0) % 17.0, (x * 5.0) % 7.0)
            })
            .collect();
        let t = table(rows);
        let mut lists: Vec<Ranking> = Metric::ALL.into_iter().map(|m| top_k(&rank_terms(&t, m), 5).unwrap()).collect();
        let forward = union_candidates(&t, &lists).unwrap();
        lists.reverse();
        assert_eq!(union_candidates(&t, &lists).unwrap(), forward);
        assert!((5..=20).contains(&forward.len()));
    }

    #[test]
    fn sources_field_for_two_metrics() {
        let c = Candidate {
            term: "x".into(),
            ranks: [1, 9, 9, 2],
            in_top_k: [true, false, false, true],
        };
        assert_eq!(c.sources_field(), "tf;entropy");
    }

    #[test]
    fn tsv_round_trip() {
        let rows = vec![row("a", 0.9, 5.0, 5.0, 0.0), row("b", 0.1, 0.0, 5.0, 0.0), row("c", 0.0, 5.0, 0.0, 0.9)];
        let set = select_candidates(&table(rows), 1).unwrap();
        let mut buf = Vec::new();
        set.write_tsv(&mut buf).unwrap();
        assert_eq!(CandidateSet::read_tsv(buf.as_slice()).unwrap(), set);

        let single = CandidateSet::new(1, vec![set.entries()[0].clone()]);
        let mut buf = Vec::new();
        single.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 2);

        let no_k = text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
        assert_eq!(CandidateSet::read_tsv(no_k.as_bytes()).unwrap().k, 1);
    }
}
