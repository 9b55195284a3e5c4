use std::fs::{self, File};
use std::io::{BufReader, Write};

use techstop::ingest::{load_corpus_path, CorpusFormat, Document};
use techstop::lists::{resolve_list, SourceTag, StopwordList};
use techstop::pipeline::{self, read_corpus_tsv, PipelineConfig};
use techstop::rank::CandidateSet;
use techstop::review::{create_session, Label, ReviewItem};
use techstop::stats::StatsTable;
use techstop::synthetic::{generate, SyntheticConfig};

fn write_jsonl(path: &std::path::Path, docs: &[Document]) {
    let mut f = File::create(path).unwrap();
    for d in docs {
        writeln!(f, "{}", serde_json::to_string(d).unwrap()).unwrap();
    }
}

#[test]
fn stages_communicate_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("docs.jsonl");
    let docs = generate(&SyntheticConfig {
        documents: 300,
        ..SyntheticConfig::default()
    });
    write_jsonl(&input, &docs);

    let loaded: Vec<Document> = load_corpus_path(&input, CorpusFormat::Jsonl)
        .unwrap()
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(loaded, docs);

    let config = PipelineConfig {
        k: 20,
        ..PipelineConfig::default()
    };
    let pre = pipeline::preprocess(&loaded, &config).unwrap();
    for (name, bytes) in pipeline::preprocess_artifacts(&pre).unwrap() {
        fs::write(dir.path().join(name), bytes).unwrap();
    }
    let corpus = read_corpus_tsv(BufReader::new(File::open(dir.path().join(pipeline::CORPUS_TSV)).unwrap())).unwrap();
    assert_eq!(corpus, pre.corpus);

    let (index, table) = pipeline::compute_stats(&corpus, &config).unwrap();
    let stats_path = dir.path().join(pipeline::STATS_TSV);
    table.write_tsv(File::create(&stats_path).unwrap()).unwrap();
    let reread = StatsTable::read_tsv(BufReader::new(File::open(&stats_path).unwrap())).unwrap();
    assert_eq!(reread.len(), index.vocabulary_size());

    // ranking a re-read table gives the same candidates as the in-memory one
    let from_file = pipeline::rank(&reread, &config).unwrap();
    let in_memory = pipeline::rank(&table, &config).unwrap();
    assert_eq!(from_file.terms(), in_memory.terms());

    let cand_path = dir.path().join(pipeline::CANDIDATES_TSV);
    from_file.write_tsv(File::create(&cand_path).unwrap()).unwrap();
    let set = CandidateSet::read_tsv(BufReader::new(File::open(&cand_path).unwrap())).unwrap();
    assert_eq!(set, from_file);

    let mut session = create_session("files", ReviewItem::from_candidates(&set), vec!["a".into(), "b".into()]).unwrap();
    for rater in ["a", "b"] {
        for (i, item) in set.entries().iter().enumerate() {
            let label = if i % 3 == 0 { Label::Stopword } else { Label::Informative };
            session.submit_label(rater, &item.term, label).unwrap();
        }
    }
    let list = session.finalize_stoplist(&[resolve_list("study").unwrap()]).unwrap();
    let list_path = dir.path().join("final.txt");
    fs::write(&list_path, list.to_text()).unwrap();
    let back = resolve_list(list_path.to_str().unwrap()).unwrap();
    assert_eq!(back.term_set(), list.term_set());
    assert!(back.len() >= 87);
}

#[test]
fn list_files_take_header_sources() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("custom.txt");
    fs::write(&path, "# name: mine\n# sources: uspto;study\nFoo\nbar\n\nfoo\n").unwrap();
    let list = StopwordList::read_path(&path).unwrap();
    assert_eq!(list.name, "mine");
    assert_eq!(list.terms().collect::<Vec<_>>(), ["bar", "foo"]);
    assert_eq!(list.entries()[0].sources, [SourceTag::Uspto]);
    assert!(resolve_list(dir.path().join("missing.txt").to_str().unwrap()).is_err());
}
