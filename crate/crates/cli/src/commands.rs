use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use techstop::ingest::{load_corpus_path, Document};
use techstop::lists::{apply_stoplist, merge_lists, resolve_list, StopwordList};
use techstop::pipeline::{
    self, candidate_artifacts, preprocess_artifacts, read_corpus_tsv, stats_artifacts, Artifacts, CANDIDATES_TSV, CORPUS_TSV, STATS_TSV,
};
use techstop::rank::{rank_terms, Metric};
use techstop::report::{distribution_report, Caps};
use techstop::stats::StatsTable;
use techstop::synthetic::{generate, SyntheticConfig};
use techstop_review::Store;

use crate::error::CliError;
use crate::settings::Settings;

type Result<T> = std::result::Result<T, CliError>;

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn write_artifacts(dir: &Path, artifacts: &Artifacts) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for (name, bytes) in artifacts {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

/// Runs `f` with `output` open for writing, or with stdout when it is absent.
fn with_output<F>(output: Option<&Path>, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match output {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::io(path, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

pub fn preprocess(s: &Settings) -> Result<()> {
    let input = s.require_input()?;
    s.pipeline.stoplist()?;
    let docs = load_corpus_path(input, s.corpus_format(input))
        .and_then(|stream| stream.collect::<std::result::Result<Vec<Document>, _>>())
        .map_err(|e| CliError::from(e).context(input.display()))?;
    let pre = pipeline::preprocess(&docs, &s.pipeline)?;
    write_artifacts(&s.out, &preprocess_artifacts(&pre).map_err(|e| CliError::io(&s.out, e))?)?;
    let last = pre.manifest.stages.last().expect("at least one stage");
    eprintln!(
        "{} documents, {} sentences, {} tokens, {} types ({} phrases) -> {}",
        pre.manifest.documents,
        pre.manifest.sentences,
        last.tokens,
        last.vocabulary,
        last.phrases,
        s.out.display()
    );
    Ok(())
}

pub fn stats(s: &Settings) -> Result<()> {
    let input = s.input_or_artifact(CORPUS_TSV);
    let corpus = read_corpus_tsv(open(&input)?).map_err(|e| CliError::io(&input, e))?;
    let (index, table) = pipeline::compute_stats(&corpus, &s.pipeline)?;
    write_artifacts(&s.out, &stats_artifacts(&index, &table, &s.pipeline)?)?;
    eprintln!(
        "{} terms over {} documents -> {}",
        table.len(),
        table.num_documents(),
        s.out.join(STATS_TSV).display()
    );
    Ok(())
}

fn read_stats(s: &Settings) -> Result<StatsTable> {
    let input = s.input_or_artifact(STATS_TSV);
    StatsTable::read_tsv(open(&input)?).map_err(|e| CliError::io(&input, e))
}

pub fn rank(s: &Settings) -> Result<()> {
    let table = read_stats(s)?;
    let set = pipeline::rank(&table, &s.pipeline)?;
    write_artifacts(&s.out, &candidate_artifacts(&set))?;
    eprintln!("{} candidates (k = {}) -> {}", set.len(), set.k, s.out.join(CANDIDATES_TSV).display());
    Ok(())
}

pub fn report(s: &Settings, metric: &str, top: Option<usize>) -> Result<()> {
    let metric: Metric = metric.parse().map_err(|e: techstop::rank::RankError| CliError::usage(e.to_string()))?;
    let table = read_stats(s)?;
    match top {
        Some(n) => {
            let ranking = rank_terms(&table, metric);
            with_output(None, |w| {
                writeln!(w, "rank\tterm\t{}", metric.name())?;
                for (i, term) in ranking.terms.iter().take(n).enumerate() {
                    let row = table.get(term).expect("ranked terms come from the table");
                    writeln!(w, "{}\t{term}\t{}", i + 1, metric.value(row))?;
                }
                Ok(())
            })
        }
        None => {
            let hist = distribution_report(&table, metric, s.pipeline.bins, Caps::tail(metric))
                .map_err(|e| CliError::data(e.to_string()))?;
            with_output(None, |w| hist.write_tsv(w))
        }
    }
}

fn resolve_all(specs: &[String]) -> Result<Vec<StopwordList>> {
    specs.iter().map(|spec| resolve_list(spec).map_err(CliError::from)).collect()
}

/// Filters a token stream line by line. A line may carry a `doc_id<TAB>`
/// prefix, which is kept as is.
pub fn apply(s: &Settings, output: Option<&Path>) -> Result<()> {
    let input = s.require_input()?;
    let terms = merge_lists(&resolve_all(&s.pipeline.lists)?).term_set();
    let reader = open(input)?;
    let (mut total, mut removed) = (0usize, 0usize);
    let mut read_err = None;
    with_output(output, |w| {
        for line in reader.lines() {
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    read_err = Some(e);
                    break;
                }
            };
            let (prefix, body) = match line.split_once('\t') {
                Some((id, rest)) => (Some(id), rest),
                None => (None, line.as_str()),
            };
            let tokens: Vec<&str> = body.split_whitespace().collect();
            let (kept, n) = apply_stoplist(&tokens, &terms);
            total += tokens.len();
            removed += n;
            if let Some(id) = prefix {
                write!(w, "{id}\t")?;
            }
            writeln!(w, "{}", kept.join(" "))?;
        }
        Ok(())
    })?;
    if let Some(e) = read_err {
        return Err(CliError::io(input, e));
    }
    eprintln!("removed {removed} of {total} tokens");
    Ok(())
}

pub fn merge(s: &Settings, specs: &[String], name: Option<&str>, output: Option<&Path>) -> Result<()> {
    let specs = if specs.is_empty() { &s.pipeline.lists } else { specs };
    if specs.is_empty() {
        return Err(CliError::usage("name at least one list"));
    }
    let mut merged = merge_lists(&resolve_all(specs)?);
    if let Some(name) = name {
        merged.name = name.to_string();
    }
    with_output(output, |w| merged.write(w))?;
    eprintln!("{} terms in {}", merged.len(), merged.name);
    Ok(())
}

pub fn synth(documents: usize, seed: u64, output: Option<&Path>) -> Result<()> {
    if documents == 0 {
        return Err(CliError::usage("documents must be at least 1"));
    }
    let config = SyntheticConfig {
        seed,
        documents,
        ..SyntheticConfig::default()
    };
    let docs = generate(&config);
    with_output(output, |w| {
        for doc in &docs {
            serde_json::to_writer(&mut *w, doc)?;
            writeln!(w)?;
        }
        Ok(())
    })
}

pub fn serve(s: &Settings, addr: SocketAddr, sessions: Option<PathBuf>, static_dir: Option<PathBuf>) -> Result<()> {
    let dir = sessions.unwrap_or_else(|| s.out.join("sessions"));
    let store = Store::open(&dir)?;
    if let Some(d) = &static_dir {
        if !d.is_dir() {
            return Err(CliError::usage(format!("{}: not a directory", d.display())));
        }
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::io(Path::new("<runtime>"), e))?;
    eprintln!("listening on http://{addr} (sessions in {})", dir.display());
    runtime
        .block_on(techstop_review::serve(addr, store, static_dir))
        .map_err(|e| CliError::io(Path::new(&addr.to_string()), e))
}
