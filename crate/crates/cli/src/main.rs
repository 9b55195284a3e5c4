//! `techstop`: discover technical stopwords in a patent-style corpus.
//!
//! Exit codes: 0 success, 1 usage error, 2 malformed data, 3 I/O failure.

mod commands;
mod error;
mod settings;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use error::CliError;
use settings::{GlobalArgs, Settings};

#[derive(Debug, Parser)]
#[command(name = "techstop", version, about = "Discover technical stopwords in a document corpus")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tokenize, detect phrases and lemmatize a raw corpus into the artifact directory
    Preprocess,
    /// Compute term statistics, histograms and the rank-frequency table
    Stats,
    /// Form the top-k union candidate set from the statistics table
    Rank,
    /// Print a metric histogram, or the top terms of one metric
    Report {
        /// tf, idf, tfidf or entropy
        #[arg(long, default_value = "tf")]
        metric: String,
        /// Print the N best-ranked terms instead of the histogram
        #[arg(long)]
        top: Option<usize>,
    },
    /// Remove listed terms from a token stream
    Apply {
        /// Write here instead of stdout
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Merge stopword lists into one list file
    MergeLists {
        /// Embedded list names or list files [default: --lists]
        specs: Vec<String>,
        /// Name recorded in the list header
        #[arg(long)]
        name: Option<String>,
        /// Write here instead of stdout
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the labeling service
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Event log directory [default: <out>/sessions]
        #[arg(long)]
        sessions: Option<PathBuf>,
        /// Directory of static files for the labeling UI
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
    /// Write a synthetic JSONL corpus
    Synth {
        #[arg(long, default_value_t = 1000)]
        documents: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Write here instead of stdout
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let s = Settings::resolve(&cli.global)?;
    let go = || match &cli.command {
        Command::Preprocess => commands::preprocess(&s),
        Command::Stats => commands::stats(&s),
        Command::Rank => commands::rank(&s),
        Command::Report { metric, top } => commands::report(&s, metric, *top),
        Command::Apply { output } => commands::apply(&s, output.as_deref()),
        Command::MergeLists { specs, name, output } => commands::merge(&s, specs, name.as_deref(), output.as_deref()),
        Command::Serve { addr, sessions, static_dir } => commands::serve(&s, *addr, sessions.clone(), static_dir.clone()),
        Command::Synth { documents, seed, output } => commands::synth(*documents, *seed, output.as_deref()),
    };
    match s.workers {
        Some(n) => techstop::with_workers(n, go),
        None => go(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { error::USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("techstop: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
