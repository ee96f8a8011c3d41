use std::hint::black_box;

use asymenv::environment::{generate_path, IncrementSampler, SimConfig, StopRule, StreamId};
use asymenv::extrema::{compute_b, sweep_extrema};
use asymenv_bench::{fixture_values, index, INDICES};
use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use rand_chacha::rand_core::SeedableRng;

fn increments(c: &mut Criterion) {
    let mut g = c.benchmark_group("increment");
    g.throughput(Throughput::Elements(1));
    for a in INDICES {
        let sampler = IncrementSampler::new(index(a), 1e-3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        g.bench_function(format!("a={a}"), |b| b.iter(|| sampler.sample(&mut rng)));
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("sweep");
    for a in [1.5, 2.0] {
        let values = fixture_values(a, 1e-3);
        g.throughput(Throughput::Elements(values.len() as u64));
        g.bench_function(format!("a={a}"), |b| b.iter(|| sweep_extrema(black_box(&values), 1.0).unwrap()));
    }
    g.finish();
}

fn paths(c: &mut Criterion) {
    let mut g = c.benchmark_group("path_and_b");
    g.sample_size(20);
    for a in [1.5, 2.0] {
        let cfg = SimConfig::new(index(a));
        let stop = StopRule { level: 0.8, firings: 5 };
        let mut path = 0;
        g.bench_function(format!("a={a}"), |b| {
            b.iter(|| {
                path += 1;
                let p = generate_path(&cfg, &stop, StreamId { path, retry: 0 }).unwrap();
                compute_b(&p, 0.8).unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, increments, sweep, paths);
criterion_main!(benches);
