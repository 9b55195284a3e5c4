//! Corpus loading, sentence segmentation and token normalization.
//!
//! A [`Document`] is one record of the collection (title plus abstract). It is
//! the unit over which document frequencies and per-document term counts are
//! taken. Sentences only matter for phrase counting, so every
//! [`TokenSequence`] remembers the document it came from.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: malformed record: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: duplicate document id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: document {id:?} has neither title nor abstract")]
    EmptyDocument { line: usize, id: String },
    #[error("unknown corpus format {0:?} (expected jsonl, tsv or plain_lines)")]
    UnknownFormat(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default, rename = "abstract")]
    pub abstract_text: String,
}

impl Document {
    pub fn new(id: impl Into<String>, title: impl Into<String>, abstract_text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            title: title.into(),
            abstract_text: abstract_text.into(),
        }
    }

    fn is_blank(&self) -> bool {
        self.title.trim().is_empty() && self.abstract_text.trim().is_empty()
    }
}

/// Normalized tokens of one sentence, tagged with the owning document id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSequence {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn new(doc_id: impl Into<String>, tokens: Vec<String>) -> Self {
        TokenSequence {
            doc_id: doc_id.into(),
            tokens,
        }
    }

    pub fn from_text(doc_id: impl Into<String>, sentence: &str) -> Self {
        TokenSequence::new(doc_id, normalize_tokenize(sentence))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    Jsonl,
    Tsv,
    PlainLines,
}

impl FromStr for CorpusFormat {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "tsv" => Ok(CorpusFormat::Tsv),
            "plain_lines" | "plain-lines" | "plain" => Ok(CorpusFormat::PlainLines),
            other => Err(IngestError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::Jsonl => "jsonl",
            CorpusFormat::Tsv => "tsv",
            CorpusFormat::PlainLines => "plain_lines",
        })
    }
}

/// Lazily parses documents from `reader`. Blank lines are skipped but still
/// counted, so line numbers in errors and synthetic ids match the input file.
pub fn load_corpus<R: BufRead>(reader: R, format: CorpusFormat) -> DocumentStream<R> {
    DocumentStream {
        lines: reader.lines(),
        format,
        line_no: 0,
        seen: HashSet::new(),
    }
}

pub fn load_corpus_path(
    path: impl AsRef<Path>,
    format: CorpusFormat,
) -> Result<DocumentStream<BufReader<File>>, IngestError> {
    let file = File::open(path)?;
    Ok(load_corpus(BufReader::new(file), format))
}

pub struct DocumentStream<R> {
    lines: io::Lines<R>,
    format: CorpusFormat,
    line_no: usize,
    seen: HashSet<String>,
}

impl<R: BufRead> DocumentStream<R> {
    fn parse_line(&self, line: &str) -> Result<Document, IngestError> {
        let line_no = self.line_no;
        match self.format {
            CorpusFormat::Jsonl => serde_json::from_str::<Document>(line).map_err(|e| IngestError::Malformed {
                line: line_no,
                reason: e.to_string(),
            }),
            CorpusFormat::Tsv => {
                let fields: Vec<&str> = line.split('\t').collect();
                if fields.len() != 3 {
                    return Err(IngestError::Malformed {
                        line: line_no,
                        reason: format!("expected 3 tab-separated columns, found {}", fields.len()),
                    });
                }
                Ok(Document::new(fields[0], fields[1], fields[2]))
            }
            CorpusFormat::PlainLines => Ok(Document::new(format!("doc-{line_no}"), "", line)),
        }
    }
}

impl<R: BufRead> Iterator for DocumentStream<R> {
    type Item = Result<Document, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.trim().is_empty() {
                continue;
            }
            let doc = match self.parse_line(line) {
                Ok(doc) => doc,
                Err(e) => return Some(Err(e)),
            };
            if doc.id.is_empty() {
                return Some(Err(IngestError::Malformed {
                    line: self.line_no,
                    reason: "empty id".into(),
                }));
            }
            if doc.is_blank() {
                return Some(Err(IngestError::EmptyDocument {
                    line: self.line_no,
                    id: doc.id,
                }));
            }
            if !self.seen.insert(doc.id.clone()) {
                return Some(Err(IngestError::DuplicateId {
                    line: self.line_no,
                    id: doc.id,
                }));
            }
            return Some(Ok(doc));
        }
    }
}

/// Splits a document into sentences. The whole title is one sentence; the
/// abstract is cut after every `.`, `!` or `?` that is followed by whitespace
/// or the end of the text. Abbreviations are not protected.
pub fn segment_sentences(doc: &Document) -> Vec<String> {
    let mut out = Vec::new();
    let title = doc.title.trim();
    if !title.is_empty() {
        out.push(title.to_string());
    }
    split_terminated(&doc.abstract_text, &mut out);
    out
}

fn split_terminated(text: &str, out: &mut Vec<String>) {
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let at_boundary = match chars.peek() {
            None => true,
            Some(&(_, next)) => next.is_whitespace(),
        };
        if at_boundary {
            let end = i + c.len_utf8();
            push_trimmed(&text[start..end], out);
            start = end;
        }
    }
    push_trimmed(&text[start..], out);
}

fn push_trimmed(piece: &str, out: &mut Vec<String>) {
    let piece = piece.trim();
    if !piece.is_empty() {
        out.push(piece.to_string());
    }
}

const KEPT_PUNCTUATION: [char; 3] = ['-', '/', '_'];

/// True for characters the tokenizer turns into whitespace: Unicode
/// punctuation plus ASCII symbols, except `-`, `/` and `_`.
pub fn is_separator_punctuation(c: char) -> bool {
    if KEPT_PUNCTUATION.contains(&c) {
        return false;
    }
    if c.is_ascii_punctuation() {
        return true;
    }
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Lowercases, blanks out punctuation other than `-`, `/`, `_`, and splits
/// on whitespace. Tokens made only of the kept separators are dropped.
pub fn normalize_tokenize(sentence: &str) -> Vec<String> {
    let cleaned: String = sentence
        .to_lowercase()
        .chars()
        .map(|c| if is_separator_punctuation(c) { ' ' } else { c })
        .collect();
    cleaned
        .split_whitespace()
        .filter(|tok| !tok.chars().all(|c| KEPT_PUNCTUATION.contains(&c)))
        .map(str::to_string)
        .collect()
}

/// Segments and tokenizes every document, dropping sentences that end up
/// with no tokens.
pub fn tokenize_documents(docs: &[Document]) -> Vec<TokenSequence> {
    crate::par::map(docs, |doc| {
        segment_sentences(doc)
            .iter()
            .map(|s| TokenSequence::from_text(doc.id.clone(), s))
            .filter(|seq| !seq.is_empty())
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn load(text: &str, format: CorpusFormat) -> Vec<Result<Document, IngestError>> {
        load_corpus(text.as_bytes(), format).collect()
    }

    #[test]
    fn jsonl_maps_fields() {
        let docs = load(
            r#"{"id":"p1","title":"Gas turbine","abstract":"A turbine."}"#,
            CorpusFormat::Jsonl,
        );
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].as_ref().unwrap(), &Document::new("p1", "Gas turbine", "A turbine."));
    }

    #[test]
    fn plain_lines_get_synthetic_ids() {
        let docs: Vec<_> = load("first\n\na method for welding\n", CorpusFormat::PlainLines)
            .into_iter()
            .map(Result::unwrap)
            .collect();
        assert_eq!(docs[1], Document::new("doc-3", "", "a method for welding"));
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let docs = load(
            "{\"id\":\"p1\",\"title\":\"a\"}\n{\"id\":\"p1\",\"title\":\"b\"}\n",
            CorpusFormat::Jsonl,
        );
        assert!(docs[0].is_ok());
        match &docs[1] {
            Err(IngestError::DuplicateId { id, line }) => {
                assert_eq!(id, "p1");
                assert_eq!(*line, 2);
            }
            other => panic!("expected duplicate id, got {other:?}"),
        }
    }

    #[test]
    fn malformed_records_carry_line_numbers() {
        let docs = load("p1\tt\ta\nbroken line\n", CorpusFormat::Tsv);
        assert!(docs[0].is_ok());
        assert!(matches!(docs[1], Err(IngestError::Malformed { line: 2, .. })));

        let docs = load("\n{not json\n", CorpusFormat::Jsonl);
        assert!(matches!(docs[0], Err(IngestError::Malformed { line: 2, .. })));

        let docs = load(r#"{"id":"x","title":"","abstract":" "}"#, CorpusFormat::Jsonl);
        assert!(matches!(docs[0], Err(IngestError::EmptyDocument { .. })));
    }

    #[test]
    fn title_is_its_own_sentence() {
        let doc = Document::new("p1", "Gas turbine", "It spins. It cools.");
        assert_eq!(segment_sentences(&doc), vec!["Gas turbine", "It spins.", "It cools."]);
        assert_eq!(segment_sentences(&Document::new("p2", "X", "")), vec!["X"]);
    }

    #[test]
    fn abbreviations_are_not_protected() {
        let doc = Document::new("p", "", "Uses approx. 5 V.");
        assert_eq!(segment_sentences(&doc), vec!["Uses approx.", "5 V."]);
        // a period inside a token does not split
        let doc = Document::new("p", "", "Version 2.5 works!Really? yes");
        assert_eq!(segment_sentences(&doc), vec!["Version 2.5 works!Really?", "yes"]);
    }

    #[test]
    fn tokenizer_keeps_hyphen_and_slash() {
        assert_eq!(normalize_tokenize("AC/DC inter-link, tested."), vec!["ac/dc", "inter-link", "tested"]);
        assert_eq!(normalize_tokenize("The motor"), vec!["the", "motor"]);
        assert_eq!(normalize_tokenize("a - b"), vec!["a", "b"]);
        assert_eq!(normalize_tokenize("x / _ -- y"), vec!["x", "y"]);
    }

    #[test]
    fn tokenizer_handles_unicode_punctuation() {
        assert_eq!(normalize_tokenize("«Größe» — 5 µm…"), vec!["größe", "5", "µm"]);
        assert_eq!(normalize_tokenize("it's $5+tax"), vec!["it", "s", "5", "tax"]);
    }

    proptest! {
        #[test]
        fn tokenization_is_idempotent(s in "[A-Za-z0-9 .,;:!?'\"()/_\\-éÉßİ«»—]{0,60}") {
            let once = normalize_tokenize(&s);
            let twice = normalize_tokenize(&once.join(" "));
            prop_assert_eq!(&once, &twice);
            for tok in &once {
                prop_assert!(!tok.is_empty());
                prop_assert!(tok.chars().all(|c| !is_separator_punctuation(c)));
                prop_assert_eq!(tok.to_lowercase(), tok.clone());
            }
        }

        #[test]
        fn loading_is_deterministic(lines in proptest::collection::vec("[a-z ]{1,20}", 1..20)) {
            let text = lines.join("\n");
            let a: Vec<_> = load_corpus(text.as_bytes(), CorpusFormat::PlainLines).map(|d| d.ok()).collect();
            let b: Vec<_> = load_corpus(text.as_bytes(), CorpusFormat::PlainLines).map(|d| d.ok()).collect();
            prop_assert_eq!(a, b);
        }
    }
}
