//! Stopword lists with provenance, the embedded reference lists, and the
//! plain-text list format.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const NLTK: &str = include_str!("../data/nltk.txt");
const USPTO: &str = include_str!("../data/uspto.txt");
const STUDY: &str = include_str!("../data/study.txt");
const PRIOR_STUDY: &str = include_str!("../data/prior_study.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceTag {
    Nltk,
    Uspto,
    Study,
    Session,
    Prior,
}

impl SourceTag {
    pub fn name(self) -> &'static str {
        match self {
            SourceTag::Nltk => "nltk",
            SourceTag::Uspto => "uspto",
            SourceTag::Study => "study",
            SourceTag::Session => "session",
            SourceTag::Prior => "prior",
        }
    }
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SourceTag {
    type Err = ListError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [SourceTag::Nltk, SourceTag::Uspto, SourceTag::Study, SourceTag::Session, SourceTag::Prior]
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| ListError::UnknownSource(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum ListError {
    #[error("unknown list {0:?} (embedded lists: {names})", names = EMBEDDED_NAMES.join(", "))]
    UnknownList(String),
    #[error("unknown source tag {0:?}")]
    UnknownSource(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListEntry {
    pub term: String,
    pub sources: Vec<SourceTag>,
}

/// Sorted list of case-folded, unique terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopwordList {
    pub name: String,
    entries: Vec<ListEntry>,
}

fn fold(term: &str) -> String {
    term.trim().to_lowercase()
}

impl StopwordList {
    pub fn new<I, S>(name: impl Into<String>, source: SourceTag, terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let entries = terms.into_iter().map(|t| ListEntry {
            term: fold(t.as_ref()),
            sources: vec![source],
        });
        Self::from_entries(name, entries)
    }

    pub fn from_entries(name: impl Into<String>, entries: impl IntoIterator<Item = ListEntry>) -> Self {
        let mut by_term: BTreeMap<String, Vec<SourceTag>> = BTreeMap::new();
        for entry in entries {
            let term = fold(&entry.term);
            if term.is_empty() {
                continue;
            }
            let sources = by_term.entry(term).or_default();
            for tag in entry.sources {
                if !sources.contains(&tag) {
                    sources.push(tag);
                }
            }
        }
        StopwordList {
            name: name.into(),
            entries: by_term.into_iter().map(|(term, sources)| ListEntry { term, sources }).collect(),
        }
    }

    pub fn entries(&self) -> &[ListEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.term.as_str())
    }

    pub fn contains(&self, term: &str) -> bool {
        let term = fold(term);
        self.entries.binary_search_by(|e| e.term.cmp(&term)).is_ok()
    }

    pub fn term_set(&self) -> HashSet<String> {
        self.terms().map(String::from).collect()
    }

    /// Every source tag present, in first-seen order.
    pub fn sources(&self) -> Vec<SourceTag> {
        let mut out = Vec::new();
        for tag in self.entries.iter().flat_map(|e| &e.sources) {
            if !out.contains(tag) {
                out.push(*tag);
            }
        }
        out
    }

    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# name: {}", self.name)?;
        let sources: Vec<&str> = self.sources().iter().map(|t| t.name()).collect();
        writeln!(out, "# sources: {}", sources.join(";"))?;
        for term in self.terms() {
            writeln!(out, "{term}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("terms are UTF-8")
    }

    /// Parses the list format. Entries take the first tag of the `# source:`
    /// or `# sources:` header, or `default_source` when there is none.
    pub fn read<R: BufRead>(input: R, default_name: &str, default_source: SourceTag) -> Result<Self, ListError> {
        let io_err = |source| ListError::Io {
            path: default_name.to_string(),
            source,
        };
        let mut name = default_name.to_string();
        let mut source = default_source;
        let mut terms = Vec::new();
        for line in input.lines() {
            let line = line.map_err(io_err)?;
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(v) = comment.strip_prefix("name:") {
                    name = v.trim().to_string();
                } else if let Some(v) = comment.strip_prefix("sources:").or_else(|| comment.strip_prefix("source:")) {
                    if let Some(first) = v.split(';').map(str::trim).find(|s| !s.is_empty()) {
                        source = first.parse()?;
                    }
                }
                continue;
            }
            if !line.trim().is_empty() {
                terms.push(line);
            }
        }
        Ok(StopwordList::new(name, source, terms))
    }

    pub fn read_path(path: &Path) -> Result<Self, ListError> {
        let file = std::fs::File::open(path).map_err(|source| ListError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("list");
        Self::read(io::BufReader::new(file), stem, SourceTag::Prior)
    }
}

/// Case-folded union. A term keeps the source tags of its first occurrence
/// followed by any new tags from later lists; the result is sorted.
pub fn merge_lists(lists: &[StopwordList]) -> StopwordList {
    let name = lists.iter().map(|l| l.name.as_str()).collect::<Vec<_>>().join("+");
    StopwordList::from_entries(name, lists.iter().flat_map(|l| l.entries.iter().cloned()))
}

/// Terms of the prior study together with their annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorMark {
    /// Also found again in the review session.
    Confirmed,
    /// Carried over into the final list without being found again.
    CarriedOver,
    /// No longer considered a stopword.
    Dropped,
}

pub fn prior_study_terms() -> Vec<(String, PriorMark)> {
    PRIOR_STUDY
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (term, mark) = l.split_once('\t').unwrap_or((l, ""));
            let mark = match mark.trim() {
                "*" => PriorMark::Confirmed,
                "+" => PriorMark::CarriedOver,
                _ => PriorMark::Dropped,
            };
            (term.to_string(), mark)
        })
        .collect()
}

pub const EMBEDDED_NAMES: [&str; 6] = ["nltk", "uspto", "study", "session", "prior", "prior-all"];

fn parse_embedded(text: &str, name: &str, source: SourceTag) -> StopwordList {
    StopwordList::read(text.as_bytes(), name, source).expect("embedded list is well-formed")
}

/// Looks up an embedded list:
///
/// * `nltk`, `uspto`: the two general-purpose reference lists
/// * `study`: the final technical list
/// * `prior`: prior-study terms carried over into `study`
/// * `session`: `study` without the carried-over terms
/// * `prior-all`: every prior-study term, whatever its mark
pub fn embedded(name: &str) -> Result<StopwordList, ListError> {
    let carried = || {
        prior_study_terms()
            .into_iter()
            .filter(|(_, m)| *m == PriorMark::CarriedOver)
            .map(|(t, _)| t)
    };
    Ok(match name {
        "nltk" => parse_embedded(NLTK, name, SourceTag::Nltk),
        "uspto" => parse_embedded(USPTO, name, SourceTag::Uspto),
        "study" => parse_embedded(STUDY, name, SourceTag::Study),
        "prior" => StopwordList::new(name, SourceTag::Prior, carried()),
        "prior-all" => StopwordList::new(name, SourceTag::Prior, prior_study_terms().into_iter().map(|(t, _)| t)),
        "session" => {
            let carried: HashSet<String> = carried().collect();
            let study = parse_embedded(STUDY, name, SourceTag::Session);
            StopwordList::new(name, SourceTag::Session, study.terms().filter(|t| !carried.contains(*t)))
        }
        _ => return Err(ListError::UnknownList(name.to_string())),
    })
}

/// Resolves an embedded list name, or else reads the argument as a path.
pub fn resolve_list(spec: &str) -> Result<StopwordList, ListError> {
    if EMBEDDED_NAMES.contains(&spec) {
        return embedded(spec);
    }
    let path = Path::new(spec);
    if path.exists() {
        StopwordList::read_path(path)
    } else {
        Err(ListError::UnknownList(spec.to_string()))
    }
}

pub fn resolve_lists<S: AsRef<str>>(specs: &[S]) -> Result<StopwordList, ListError> {
    let lists = specs.iter().map(|s| resolve_list(s.as_ref())).collect::<Result<Vec<_>, _>>()?;
    Ok(merge_lists(&lists))
}

/// Whether `token` is listed, either directly or, for a joined phrase,
/// in its spaced form ("vice_versa" matches "vice versa").
pub fn is_stopword(token: &str, terms: &HashSet<String>) -> bool {
    if terms.contains(token) {
        return true;
    }
    token.contains('_') && terms.contains(&token.replace('_', " "))
}

/// Drops listed tokens and reports how many were removed.
pub fn apply_stoplist<S: AsRef<str>>(tokens: &[S], terms: &HashSet<String>) -> (Vec<String>, usize) {
    let kept: Vec<String> = tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| !is_stopword(t, terms))
        .map(String::from)
        .collect();
    let removed = tokens.len() - kept.len();
    (kept, removed)
}
