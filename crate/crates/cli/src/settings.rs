//! Global options: command-line flags override the TOML config file, which
//! overrides the built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use techstop::ingest::CorpusFormat;
use techstop::pipeline::PipelineConfig;

use crate::error::CliError;

pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Input file for the command [default: the stage's artifact]
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Corpus format: jsonl, tsv or plain_lines (guessed from the extension)
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Artifact directory [default: out]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads [default: all cores]
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Phrase discount
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Phrase thresholds, one pass each, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// Drop terms seen fewer times than this
    #[arg(long, global = true)]
    pub min_count: Option<u64>,
    /// Top-k cutoff per metric
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Stopword lists: embedded names or file paths, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub lists: Option<Vec<String>>,
    /// Histogram bins
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    /// TOML file with any of the options above
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// The raw corpus; later stages read their artifacts instead.
    pub input: Option<PathBuf>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub delta: Option<f64>,
    pub thresholds: Option<Vec<f64>>,
    pub min_count: Option<u64>,
    pub k: Option<usize>,
    pub lists: Option<Vec<String>>,
    pub bins: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub input: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub format: Option<CorpusFormat>,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub pipeline: PipelineConfig,
}

impl Settings {
    pub fn resolve(args: &GlobalArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        Self::merge(args.clone(), file)
    }

    pub fn merge(args: GlobalArgs, file: FileConfig) -> Result<Self, CliError> {
        let defaults = PipelineConfig::default();
        let lists: Vec<String> = args
            .lists
            .or(file.lists)
            .unwrap_or(defaults.lists)
            .into_iter()
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        let pipeline = PipelineConfig {
            delta: args.delta.or(file.delta).unwrap_or(defaults.delta),
            thresholds: args.thresholds.or(file.thresholds).unwrap_or(defaults.thresholds),
            min_count: args.min_count.or(file.min_count).unwrap_or(defaults.min_count),
            k: args.k.or(file.k).unwrap_or(defaults.k),
            lists,
            bins: args.bins.or(file.bins).unwrap_or(defaults.bins),
        };
        pipeline.validate()?;
        let workers = args.workers.or(file.workers);
        if workers == Some(0) {
            return Err(CliError::usage("workers must be at least 1"));
        }
        let format = args.format.or(file.format).map(|f| f.parse::<CorpusFormat>()).transpose()?;
        Ok(Settings {
            input: args.input,
            corpus: file.input,
            format,
            out: args.out.or(file.out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            workers,
            pipeline,
        })
    }

    /// `--input`, or else the raw corpus named in the config file.
    pub fn require_input(&self) -> Result<&Path, CliError> {
        self.input
            .as_deref()
            .or(self.corpus.as_deref())
            .ok_or_else(|| CliError::usage("--input is required"))
    }

    /// `--input`, or else `name` inside the artifact directory.
    pub fn input_or_artifact(&self, name: &str) -> PathBuf {
        self.input.clone().unwrap_or_else(|| self.out.join(name))
    }

    pub fn corpus_format(&self, path: &Path) -> CorpusFormat {
        self.format.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "json") => CorpusFormat::Jsonl,
            Some("tsv") => CorpusFormat::Tsv,
            _ => CorpusFormat::PlainLines,
        })
    }
}
