//! Pipeline stages on one worker versus the full pool.
//!
//! Run once with default features (rayon) and once with
//! `--no-default-features` (sequential build) to compare both code paths.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use etngen::bucket::{Bucketing, Periodicity};
use etngen::dynamics::{coverage_distribution, mfpt_distribution, DynConfig, StartPolicy};
use etngen::etn::mine_counts;
use etngen::gen::{generate, GenConfig};
use etngen::metrics::hour_metrics;
use etngen::model::LocalModel;
use etngen::synthetic::{daily_sinusoid, ActivitySpec, MONDAY_EPOCH};
use etngen::tempgraph::TemporalGraph;
use rayon::ThreadPool;

fn school() -> TemporalGraph {
    let spec = ActivitySpec { nodes: 126, snapshots: 1150, gap: 300, epoch: MONDAY_EPOCH, persistence: 0.6, seed: 1 };
    daily_sinusoid(&spec, 0.5, 40.0)
}

fn pools() -> Vec<(String, ThreadPool)> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut sizes = vec![1];
    if all > 1 {
        sizes.push(all);
    }
    sizes
        .into_iter()
        .map(|n| (format!("{n}-threads"), rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()))
        .collect()
}

fn stages(c: &mut Criterion) {
    let g = school();
    let model = LocalModel::train(&g, 2, Periodicity::Daily).unwrap();
    let buckets = Bucketing::for_graph(&g, Periodicity::Daily);
    let walks = DynConfig { start: StartPolicy::FirstPeak, rw_runs: 1000, mfpt_repeats: 1, ..DynConfig::default() };
    let short = g.slice(0..300);

    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_with_input(BenchmarkId::new("mine_counts", &name), &pool, |b, pool| {
            b.iter(|| pool.install(|| mine_counts(black_box(&g), 2, &buckets).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("generate", &name), &pool, |b, pool| {
            b.iter(|| pool.install(|| generate(&model, black_box(&GenConfig::new(126, 1150))).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("hour_metrics", &name), &pool, |b, pool| {
            b.iter(|| pool.install(|| hour_metrics(black_box(&g)).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("walk_coverage", &name), &pool, |b, pool| {
            b.iter(|| pool.install(|| coverage_distribution(black_box(&g), &walks).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("mfpt", &name), &pool, |b, pool| {
            b.iter(|| pool.install(|| mfpt_distribution(black_box(&short), &walks).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, stages);
criterion_main!(benches);
