use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use opt_bench::{channel, circuit_workload, mixed_state};
use opt_core::audit::{purify_state, stinespring_dilate};
use opt_core::dsl;
use opt_core::tomography::{equivalent_transfers, RefPolicy};
use opt_core::TheoryBackend;

fn evaluation(c: &mut Criterion) {
    let mut g = c.benchmark_group("evaluate");
    for (name, b) in [
        ("quantum", TheoryBackend::quantum()),
        ("quantum-real", TheoryBackend::quantum_real()),
        ("classical", TheoryBackend::classical()),
    ] {
        let (m, d) = circuit_workload(b, 1);
        g.bench_function(name, |bench| bench.iter(|| m.evaluate(black_box(&d)).unwrap()));
    }
    g.finish();
}

fn audits(c: &mut Criterion) {
    let mut g = c.benchmark_group("audit");
    for d in [2, 3, 4] {
        let (b, st) = mixed_state(d, 2);
        g.bench_with_input(BenchmarkId::new("purify", d), &st, |bench, st| bench.iter(|| purify_state(&b, st).unwrap()));
        let (b, t) = channel(d, 3);
        g.bench_with_input(BenchmarkId::new("dilate", d), &t, |bench, t| bench.iter(|| stinespring_dilate(&b, t).unwrap()));
        let (_, t2) = channel(d, 4);
        let policy = RefPolicy::default_for(&b);
        g.bench_with_input(BenchmarkId::new("equivalence", d), &t2, |bench, t2| {
            bench.iter(|| equivalent_transfers(&b, &t, t2, &policy).unwrap())
        });
    }
    g.finish();
}

fn parsing(c: &mut Criterion) {
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/bell.opt")).unwrap();
    c.bench_function("dsl/load bell", |bench| bench.iter(|| dsl::load(black_box(&src)).unwrap()));
}

criterion_group!(benches, evaluation, audits, parsing);
criterion_main!(benches);
