// SPDX-License-Identifier: Apache-2.0

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use shade_core::evaluation::{subsample_eval, EvalOptions};
use shade_core::{score_query, FusionConfig, SemanticGraph};

fn spectrum(c: &mut Criterion) {
    let mut group = c.benchmark_group("laplacian_spectrum");
    for n in [10, 25, 50, 100] {
        let q = &shade_bench::pool(1, n, 7)[0];
        let graph = SemanticGraph::from_entailment(q.entailment.as_ref().unwrap());
        group.bench_with_input(BenchmarkId::from_parameter(n), &graph, |b, g| {
            b.iter(|| g.spectrum().unwrap())
        });
    }
    group.finish();
}

fn score(c: &mut Criterion) {
    let cfg = FusionConfig::default();
    let mut group = c.benchmark_group("score_query");
    for n in [5, 10, 50] {
        let q = &shade_bench::pool(1, n, 11)[0];
        group.bench_with_input(BenchmarkId::from_parameter(n), q, |b, q| {
            b.iter(|| score_query(q.cluster_labels.as_deref(), q.entailment.as_ref(), &cfg).unwrap())
        });
    }
    group.finish();
}

fn evaluate(c: &mut Criterion) {
    let pool = shade_bench::pool(20, 100, 3);
    let opts = EvalOptions {
        trials: 2,
        ..Default::default()
    };
    let cfg = FusionConfig::default();
    c.bench_function("subsample_eval_20x100", |b| {
        b.iter(|| subsample_eval(&pool, &opts, &cfg).unwrap())
    });
}

criterion_group!(benches, spectrum, score, evaluate);
criterion_main!(benches);
