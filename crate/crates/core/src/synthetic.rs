//! Seeded synthetic patent-like corpora for tests and benchmarks.
//!
//! Content words follow a Zipf law; function words are sprinkled in; a
//! fixed set of two- and three-word collocations is planted often enough
//! for phrase detection to pick them up.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::ingest::Document;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub documents: usize,
    /// Abstract sentences per document; the title adds one more.
    pub abstract_sentences: usize,
    pub min_sentence_len: usize,
    pub max_sentence_len: usize,
    pub vocabulary: usize,
    pub zipf_exponent: f64,
    pub collocations: usize,
    /// Chance that a content slot is filled by a planted collocation.
    pub collocation_rate: f64,
    /// Chance that a slot is a function word.
    pub function_rate: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 7,
            documents: 1000,
            abstract_sentences: 4,
            min_sentence_len: 6,
            max_sentence_len: 18,
            vocabulary: 5000,
            zipf_exponent: 1.07,
            collocations: 60,
            collocation_rate: 0.08,
            function_rate: 0.3,
        }
    }
}

impl SyntheticConfig {
    /// A corpus of `sentences` sentences, five per document.
    pub fn with_sentences(seed: u64, sentences: usize) -> Self {
        SyntheticConfig {
            seed,
            documents: sentences.div_ceil(5),
            ..SyntheticConfig::default()
        }
    }

    pub fn sentence_count(&self) -> usize {
        self.documents * (self.abstract_sentences + 1)
    }
}

const FUNCTION_WORDS: [&str; 16] = [
    "the", "a", "an", "of", "in", "to", "and", "for", "with", "is", "by", "on", "said", "wherein", "which", "from",
];

const ONSETS: [&str; 14] = ["b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "tr"];
const NUCLEI: [&str; 6] = ["a", "e", "i", "o", "u", "io"];
const CODAS: [&str; 6] = ["", "n", "r", "x", "m", "l"];

/// Deterministic pronounceable word for a vocabulary index. Distinct
/// indices give distinct words.
pub fn word(index: usize) -> String {
    let mut out = String::new();
    let mut i = index;
    loop {
        out.push_str(ONSETS[i % ONSETS.len()]);
        i /= ONSETS.len();
        out.push_str(NUCLEI[i % NUCLEI.len()]);
        i /= NUCLEI.len();
        if i == 0 {
            break;
        }
        i -= 1;
    }
    out.push_str(CODAS[index % CODAS.len()]);
    out
}

struct Generator {
    rng: ChaCha8Rng,
    zipf: Zipf<f64>,
    words: Vec<String>,
    collocations: Vec<Vec<String>>,
    config: SyntheticConfig,
}

impl Generator {
    fn new(config: &SyntheticConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let words: Vec<String> = (0..config.vocabulary.max(1)).map(|i| format!("{}{}", word(i), suffix(i))).collect();
        let zipf = Zipf::new(words.len() as f64, config.zipf_exponent).expect("valid zipf parameters");
        let collocations = (0..config.collocations)
            .map(|c| {
                let len = if c % 3 == 0 { 3 } else { 2 };
                (0..len).map(|_| words[rng.random_range(words.len() / 10..words.len())].clone()).collect()
            })
            .collect();
        Generator {
            rng,
            zipf,
            words,
            collocations,
            config: config.clone(),
        }
    }

    fn sentence(&mut self) -> Vec<String> {
        let len = self.rng.random_range(self.config.min_sentence_len..=self.config.max_sentence_len);
        let mut out = Vec::with_capacity(len + 2);
        while out.len() < len {
            let roll: f64 = self.rng.random();
            if roll < self.config.function_rate {
                out.push(FUNCTION_WORDS[self.rng.random_range(0..FUNCTION_WORDS.len())].to_string());
            } else if roll < self.config.function_rate + self.config.collocation_rate && !self.collocations.is_empty() {
                let c = self.rng.random_range(0..self.collocations.len());
                if self.rng.random_bool(0.3) {
                    out.push("an".to_string());
                }
                out.extend(self.collocations[c].iter().cloned());
            } else {
                let idx = self.zipf.sample(&mut self.rng) as usize - 1;
                let mut w = self.words[idx].clone();
                if self.rng.random_bool(0.1) {
                    w.push('s');
                }
                out.push(w);
            }
        }
        out
    }
}

fn suffix(i: usize) -> &'static str {
    match i % 11 {
        3 => "ing",
        7 => "ed",
        _ => "",
    }
}

/// Generates `config.documents` documents with ids `syn-000000`, ...
pub fn generate(config: &SyntheticConfig) -> Vec<Document> {
    let mut g = Generator::new(config);
    (0..config.documents)
        .map(|d| {
            let title = g.sentence().join(" ");
            let mut abstract_text = String::new();
            for s in 0..config.abstract_sentences {
                if s > 0 {
                    abstract_text.push(' ');
                }
                let mut sentence = g.sentence();
                if let Some(first) = sentence.first_mut() {
                    capitalize(first);
                }
                abstract_text.push_str(&sentence.join(" "));
                abstract_text.push_str(if s % 4 == 3 { ", etc." } else { "." });
            }
            Document::new(format!("syn-{d:06}"), title, abstract_text)
        })
        .collect()
}

fn capitalize(word: &mut String) {
    if let Some(c) = word.chars().next() {
        let upper: String = c.to_uppercase().collect();
        word.replace_range(..c.len_utf8(), &upper);
    }
}
