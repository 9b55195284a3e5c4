//! Expert review sessions over candidate terms.
//!
//! Every rater labels every candidate. Terms on which all raters agree get
//! that label as consensus; disputed terms need a recorded resolution.
//! Sessions are driven by [`Event`]s, so replaying a session's event log
//! rebuilds it exactly.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lists::{merge_lists, SourceTag, StopwordList};
use crate::rank::{CandidateSet, Metric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Stopword,
    Informative,
}

impl Label {
    pub fn as_bit(self) -> i64 {
        match self {
            Label::Stopword => 1,
            Label::Informative => 0,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Stopword => Label::Informative,
            Label::Informative => Label::Stopword,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Stopword => "stopword",
            Label::Informative => "informative",
        })
    }
}

impl FromStr for Label {
    type Err = ReviewError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stopword" => Ok(Label::Stopword),
            "informative" => Ok(Label::Informative),
            _ => Err(ReviewError::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    /// Some rater has not labeled some term yet.
    Labeling,
    /// Every label is in; disputed terms may still await resolution.
    Reconciling,
    Finalized,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReviewError {
    #[error("at least two raters are needed, got {0}")]
    TooFewRaters(usize),
    #[error("rater {0:?} is listed twice")]
    DuplicateRater(String),
    #[error("rater ids must be non-empty")]
    EmptyRater,
    #[error("a session needs at least one candidate")]
    NoCandidates,
    #[error("candidate {0:?} is listed twice")]
    DuplicateTerm(String),
    #[error("rater {0:?} is not part of this session")]
    UnknownRater(String),
    #[error("term {0:?} is not a candidate in this session")]
    UnknownTerm(String),
    #[error("unknown label {0:?}, expected stopword or informative")]
    UnknownLabel(String),
    #[error("the session is finalized")]
    Finalized,
    #[error("labeling is incomplete: {} (rater, term) pairs missing", missing.len())]
    Incomplete { missing: Vec<(String, String)> },
    #[error("term {0:?} is not disputed")]
    NotDisputed(String),
    #[error("{} disputed terms have no consensus yet", .0.len())]
    Unresolved(Vec<String>),
    #[error("at least two terms are needed")]
    TooFewTerms,
    #[error("no variance in total scores")]
    NoVariance,
    #[error("the first event of a session log must create it")]
    NotCreated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricRanks {
    pub tf: usize,
    pub idf: usize,
    pub tfidf: usize,
    pub entropy: usize,
    /// Metrics for which the term made the top-k cut.
    pub top_k: Vec<Metric>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub term: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranks: Option<MetricRanks>,
}

impl ReviewItem {
    pub fn bare(term: impl Into<String>) -> Self {
        ReviewItem {
            term: term.into(),
            ranks: None,
        }
    }

    /// Items in the set's best-rank order.
    pub fn from_candidates(set: &CandidateSet) -> Vec<ReviewItem> {
        set.entries()
            .iter()
            .map(|c| ReviewItem {
                term: c.term.clone(),
                ranks: Some(MetricRanks {
                    tf: c.rank(Metric::Tf),
                    idf: c.rank(Metric::Idf),
                    tfidf: c.rank(Metric::Tfidf),
                    entropy: c.rank(Metric::Entropy),
                    top_k: c.sources(),
                }),
            })
            .collect()
    }
}

/// One entry in a session's append-only log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Create {
        session_id: String,
        raters: Vec<String>,
        candidates: Vec<ReviewItem>,
    },
    Label {
        rater: String,
        term: String,
        label: Label,
    },
    Consensus {
        term: String,
        label: Label,
    },
    Finalize {
        priors: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub term: String,
    pub labels: BTreeMap<String, Label>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReviewSession {
    id: String,
    raters: Vec<String>,
    candidates: Vec<ReviewItem>,
    term_index: HashMap<String, usize>,
    /// `labels[rater][term]`
    labels: Vec<Vec<Option<Label>>>,
    resolutions: Vec<Option<Label>>,
    labeled: usize,
    finalized: bool,
}

pub fn create_session(id: impl Into<String>, candidates: Vec<ReviewItem>, raters: Vec<String>) -> Result<ReviewSession, ReviewError> {
    if raters.len() < 2 {
        return Err(ReviewError::TooFewRaters(raters.len()));
    }
    let mut seen = HashSet::new();
    for r in &raters {
        if r.is_empty() {
            return Err(ReviewError::EmptyRater);
        }
        if !seen.insert(r.as_str()) {
            return Err(ReviewError::DuplicateRater(r.clone()));
        }
    }
    if candidates.is_empty() {
        return Err(ReviewError::NoCandidates);
    }
    let mut term_index = HashMap::with_capacity(candidates.len());
    for (i, item) in candidates.iter().enumerate() {
        if term_index.insert(item.term.clone(), i).is_some() {
            return Err(ReviewError::DuplicateTerm(item.term.clone()));
        }
    }
    let n = candidates.len();
    Ok(ReviewSession {
        id: id.into(),
        labels: vec![vec![None; n]; raters.len()],
        raters,
        candidates,
        term_index,
        resolutions: vec![None; n],
        labeled: 0,
        finalized: false,
    })
}

impl ReviewSession {
    /// Rebuilds a session from its log. The first event must be `Create`.
    pub fn replay<'a, I>(events: I) -> Result<ReviewSession, ReviewError>
    where
        I: IntoIterator<Item = &'a Event>,
    {
        let mut events = events.into_iter();
        let mut session = match events.next() {
            Some(Event::Create {
                session_id,
                raters,
                candidates,
            }) => create_session(session_id.clone(), candidates.clone(), raters.clone())?,
            _ => return Err(ReviewError::NotCreated),
        };
        for event in events {
            session.apply(event)?;
        }
        Ok(session)
    }

    /// Applies a non-create event. `Finalize` only marks the session; the
    /// caller rebuilds the list with [`ReviewSession::finalize_stoplist`].
    pub fn apply(&mut self, event: &Event) -> Result<(), ReviewError> {
        match event {
            Event::Create { .. } => Err(ReviewError::NotCreated),
            Event::Label { rater, term, label } => self.submit_label(rater, term, *label),
            Event::Consensus { term, label } => self.record_consensus(term, *label),
            Event::Finalize { .. } => {
                self.check_reconciled()?;
                self.finalized = true;
                Ok(())
            }
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn raters(&self) -> &[String] {
        &self.raters
    }

    pub fn candidates(&self) -> &[ReviewItem] {
        &self.candidates
    }

    pub fn state(&self) -> SessionState {
        if self.finalized {
            SessionState::Finalized
        } else if self.labeled == self.expected_label_count() {
            SessionState::Reconciling
        } else {
            SessionState::Labeling
        }
    }

    /// Number of labels a complete session holds: raters × candidates.
    pub fn expected_label_count(&self) -> usize {
        self.raters.len() * self.candidates.len()
    }

    pub fn label_count(&self) -> usize {
        self.labeled
    }

    pub fn rater_progress(&self, rater: &str) -> Result<usize, ReviewError> {
        let r = self.rater_id(rater)?;
        Ok(self.labels[r].iter().filter(|l| l.is_some()).count())
    }

    fn rater_id(&self, rater: &str) -> Result<usize, ReviewError> {
        self.raters
            .iter()
            .position(|r| r == rater)
            .ok_or_else(|| ReviewError::UnknownRater(rater.to_string()))
    }

    fn term_id(&self, term: &str) -> Result<usize, ReviewError> {
        self.term_index
            .get(term)
            .copied()
            .ok_or_else(|| ReviewError::UnknownTerm(term.to_string()))
    }

    pub fn label(&self, rater: &str, term: &str) -> Result<Option<Label>, ReviewError> {
        Ok(self.labels[self.rater_id(rater)?][self.term_id(term)?])
    }

    /// Records or replaces a label. Relabeling a term discards any
    /// resolution recorded for it, since the dispute has changed.
    pub fn submit_label(&mut self, rater: &str, term: &str, label: Label) -> Result<(), ReviewError> {
        if self.finalized {
            return Err(ReviewError::Finalized);
        }
        let r = self.rater_id(rater)?;
        let t = self.term_id(term)?;
        let slot = &mut self.labels[r][t];
        match slot.replace(label) {
            None => self.labeled += 1,
            Some(old) if old != label => self.resolutions[t] = None,
            Some(_) => {}
        }
        Ok(())
    }

    /// The first candidate, in presentation order, that `rater` has not labeled.
    pub fn next_unlabeled(&self, rater: &str) -> Result<Option<&ReviewItem>, ReviewError> {
        let r = self.rater_id(rater)?;
        Ok(self.labels[r].iter().position(Option::is_none).map(|t| &self.candidates[t]))
    }

    fn agreed(&self, t: usize) -> Option<Label> {
        let first = self.labels[0][t]?;
        self.labels.iter().all(|row| row[t] == Some(first)).then_some(first)
    }

    fn disputed(&self, t: usize) -> bool {
        self.labels.iter().all(|row| row[t].is_some()) && self.agreed(t).is_none()
    }

    /// The unanimous label, or the recorded resolution of a dispute.
    pub fn consensus(&self, term: &str) -> Result<Option<Label>, ReviewError> {
        let t = self.term_id(term)?;
        Ok(self.consensus_of(t))
    }

    fn consensus_of(&self, t: usize) -> Option<Label> {
        self.agreed(t).or(self.resolutions[t])
    }

    pub fn missing_labels(&self) -> Vec<(String, String)> {
        let mut missing = Vec::new();
        for (r, row) in self.labels.iter().enumerate() {
            for (t, label) in row.iter().enumerate() {
                if label.is_none() {
                    missing.push((self.raters[r].clone(), self.candidates[t].term.clone()));
                }
            }
        }
        missing
    }

    fn check_complete(&self) -> Result<(), ReviewError> {
        if self.labeled == self.expected_label_count() {
            Ok(())
        } else {
            Err(ReviewError::Incomplete {
                missing: self.missing_labels(),
            })
        }
    }

    /// Terms whose rater labels are not unanimous, in presentation order.
    pub fn discrepancies(&self) -> Result<Vec<Discrepancy>, ReviewError> {
        self.check_complete()?;
        Ok((0..self.candidates.len())
            .filter(|&t| self.disputed(t))
            .map(|t| Discrepancy {
                term: self.candidates[t].term.clone(),
                labels: self
                    .raters
                    .iter()
                    .zip(&self.labels)
                    .map(|(r, row)| (r.clone(), row[t].expect("complete")))
                    .collect(),
            })
            .collect())
    }

    pub fn unresolved(&self) -> Result<Vec<String>, ReviewError> {
        self.check_complete()?;
        Ok((0..self.candidates.len())
            .filter(|&t| self.disputed(t) && self.resolutions[t].is_none())
            .map(|t| self.candidates[t].term.clone())
            .collect())
    }

    pub fn record_consensus(&mut self, term: &str, label: Label) -> Result<(), ReviewError> {
        if self.finalized {
            return Err(ReviewError::Finalized);
        }
        self.check_complete()?;
        let t = self.term_id(term)?;
        if !self.disputed(t) {
            return Err(ReviewError::NotDisputed(term.to_string()));
        }
        self.resolutions[t] = Some(label);
        Ok(())
    }

    /// True once labeling is complete and every dispute has a resolution.
    pub fn is_reconciled(&self) -> bool {
        self.check_reconciled().is_ok()
    }

    fn check_reconciled(&self) -> Result<(), ReviewError> {
        let open = self.unresolved()?;
        if open.is_empty() {
            Ok(())
        } else {
            Err(ReviewError::Unresolved(open))
        }
    }

    /// Terms whose consensus is stopword, in presentation order.
    pub fn consensus_stopwords(&self) -> Vec<String> {
        (0..self.candidates.len())
            .filter(|&t| self.consensus_of(t) == Some(Label::Stopword))
            .map(|t| self.candidates[t].term.clone())
            .collect()
    }

    /// Merges the consensus stopwords, tagged `session`, with `priors` and
    /// marks the session finalized. Calling it again on a finalized session
    /// rebuilds the same list.
    pub fn finalize_stoplist(&mut self, priors: &[StopwordList]) -> Result<StopwordList, ReviewError> {
        self.check_reconciled()?;
        self.finalized = true;
        let own = StopwordList::new(format!("session-{}", self.id), SourceTag::Session, self.consensus_stopwords());
        let mut lists = vec![own];
        lists.extend(priors.iter().cloned());
        Ok(merge_lists(&lists))
    }

    /// Label matrix as 0/1 bits, `[rater][term]`.
    pub fn label_matrix(&self) -> Result<Vec<Vec<i64>>, ReviewError> {
        self.check_complete()?;
        Ok(self
            .labels
            .iter()
            .map(|row| row.iter().map(|l| l.expect("complete").as_bit()).collect())
            .collect())
    }

    pub fn cronbach_alpha(&self) -> Result<f64, ReviewError> {
        cronbach_alpha(&self.label_matrix()?)
    }

    pub fn export(&self) -> SessionExport {
        let mut labels = Vec::with_capacity(self.labeled);
        for (r, row) in self.labels.iter().enumerate() {
            for (t, label) in row.iter().enumerate() {
                if let Some(label) = label {
                    labels.push(LabelRecord {
                        rater: self.raters[r].clone(),
                        term: self.candidates[t].term.clone(),
                        label: *label,
                    });
                }
            }
        }
        let consensus = (0..self.candidates.len())
            .filter_map(|t| self.consensus_of(t).map(|l| (self.candidates[t].term.clone(), l)))
            .collect();
        SessionExport {
            session_id: self.id.clone(),
            state: self.state(),
            raters: self.raters.clone(),
            candidates: self.candidates.clone(),
            labels,
            consensus,
            labeled: self.labeled,
            expected: self.expected_label_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub rater: String,
    pub term: String,
    pub label: Label,
}

/// Full snapshot of a session for clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionExport {
    pub session_id: String,
    pub state: SessionState,
    pub raters: Vec<String>,
    pub candidates: Vec<ReviewItem>,
    pub labels: Vec<LabelRecord>,
    pub consensus: BTreeMap<String, Label>,
    pub labeled: usize,
    pub expected: usize,
}

/// Cronbach's alpha with raters as items and terms as observations, using
/// population variances. `matrix[rater][term]` holds integer scores.
///
/// Variances are kept as exact integers scaled by n², so identical raters
/// give exactly 1 and complementing every label changes nothing.
pub fn cronbach_alpha(matrix: &[Vec<i64>]) -> Result<f64, ReviewError> {
    let r = matrix.len();
    if r < 2 {
        return Err(ReviewError::TooFewRaters(r));
    }
    let n = matrix[0].len();
    if n < 2 {
        return Err(ReviewError::TooFewTerms);
    }
    assert!(matrix.iter().all(|row| row.len() == n), "ragged label matrix");
    let n_i = n as i128;

    let scaled_var = |values: &mut dyn Iterator<Item = i128>| {
        let (mut sum, mut sq) = (0i128, 0i128);
        for v in values {
            sum += v;
            sq += v * v;
        }
        n_i * sq - sum * sum
    };
    let item_sum: i128 = matrix.iter().map(|row| scaled_var(&mut row.iter().map(|&x| x as i128))).sum();
    let total = scaled_var(&mut (0..n).map(|t| matrix.iter().map(|row| row[t] as i128).sum()));
    if total == 0 {
        return Err(ReviewError::NoVariance);
    }
    let r_i = r as i128;
    Ok((r_i * (total - item_sum)) as f64 / ((r_i - 1) * total) as f64)
}
