//! Compares a one-thread pool against the machine's full pool for the
//! data-parallel stages. Run with `--no-default-features` to measure the
//! sequential build; the thread count is then ignored.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use techstop::ingest::tokenize_documents;
use techstop::phrase::count_ngrams;
use techstop::stats::{build_index, compute_all_stats};
use techstop::synthetic::{generate, SyntheticConfig};
use techstop::with_workers;

fn pools() -> Vec<usize> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    if all > 1 {
        vec![1, all]
    } else {
        vec![1]
    }
}

fn stages(c: &mut Criterion) {
    let docs = generate(&SyntheticConfig::with_sentences(1, 50_000));
    let corpus = tokenize_documents(&docs);
    let tokens: u64 = corpus.iter().map(|s| s.tokens.len() as u64).sum();
    let index = build_index(&corpus).unwrap();
    let mode = if cfg!(feature = "parallel") { "rayon" } else { "sequential" };

    let mut group = c.benchmark_group(format!("stages/{mode}"));
    group.sample_size(10);
    group.throughput(Throughput::Elements(tokens));
    for workers in pools() {
        group.bench_with_input(BenchmarkId::new("count_ngrams", workers), &workers, |b, &w| {
            b.iter(|| with_workers(w, || count_ngrams(&corpus).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("build_index", workers), &workers, |b, &w| {
            b.iter(|| with_workers(w, || build_index(&corpus).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("compute_all_stats", workers), &workers, |b, &w| {
            b.iter(|| with_workers(w, || compute_all_stats(&index)))
        });
        group.bench_with_input(BenchmarkId::new("tokenize", workers), &workers, |b, &w| {
            b.iter(|| with_workers(w, || tokenize_documents(&docs)))
        });
    }
    group.finish();
}

criterion_group!(benches, stages);
criterion_main!(benches);
