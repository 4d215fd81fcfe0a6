//! Benchmarks comparing the data-parallel execution path against the
//! sequential reference on the two hot loops: batch robustness verification
//! and forest fitting. Build with `--no-default-features` to make the
//! parallel entry point itself run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use treeguard::data::Dataset;
use treeguard::exec;
use treeguard::train::{fit, Method, TrainConfig};
use treeguard::verify::{check_robust, Query, DEFAULT_NODE_BUDGET};

fn blobs(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let label = rng.gen_range(0..2usize);
        let c = if label == 0 { 0.35 } else { 0.65 };
        x.push((0..d).map(|_| (c + rng.gen_range(-0.3..0.3f64)).clamp(0.0, 1.0)).collect());
        y.push(label);
    }
    Dataset::from_parts(x, y, 2)
}

fn bench_batch_verification(c: &mut Criterion) {
    let d = blobs(300, 4, 1);
    let rows: Vec<usize> = (0..d.n_samples()).collect();
    let cfg = TrainConfig {
        method: Method::Rf,
        n_trees: 15,
        max_depth: 5,
        seed: 1,
        ..TrainConfig::default()
    };
    let e = fit(&d, &rows, &cfg).unwrap();
    let queries: Vec<(Vec<f64>, f64)> = (0..64)
        .map(|i| (d.x[i].clone(), 0.02 + 0.001 * (i % 10) as f64))
        .collect();

    let run_one = |(x, eps): &(Vec<f64>, f64)| {
        let q = Query {
            node_budget: DEFAULT_NODE_BUDGET,
            ..Query::new(&e, x, *eps)
        };
        check_robust(&q).unwrap().verdict
    };

    let mut group = c.benchmark_group("batch_verification");
    group.bench_function(BenchmarkId::new("map_indexed", queries.len()), |b| {
        b.iter(|| exec::map_indexed(queries.len(), |i| run_one(&queries[i])))
    });
    group.bench_function(BenchmarkId::new("map_indexed_seq", queries.len()), |b| {
        b.iter(|| exec::map_indexed_seq(queries.len(), |i| run_one(&queries[i])))
    });
    group.finish();
}

fn bench_forest_fitting(c: &mut Criterion) {
    let d = blobs(400, 4, 2);
    let rows: Vec<usize> = (0..d.n_samples()).collect();
    let fit_one = |seed: usize| {
        let cfg = TrainConfig {
            method: Method::GrootRf,
            n_trees: 4,
            max_depth: 6,
            epsilon_train: 0.05,
            seed: seed as u64,
            ..TrainConfig::default()
        };
        fit(&d, &rows, &cfg).unwrap()
    };
    let n_models = 8;

    let mut group = c.benchmark_group("forest_fitting");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("map_indexed", n_models), |b| {
        b.iter(|| exec::map_indexed(n_models, fit_one))
    });
    group.bench_function(BenchmarkId::new("map_indexed_seq", n_models), |b| {
        b.iter(|| exec::map_indexed_seq(n_models, fit_one))
    });
    group.finish();
}

criterion_group!(benches, bench_batch_verification, bench_forest_fitting);
criterion_main!(benches);
