use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use crater_trn::catalog::SyntheticCatalog;
use crater_trn::detect::ProfileSet;
use crater_trn::sim::{monte_carlo_sequential, SimEnv, TrialConfig};

fn batches(c: &mut Criterion) {
    let env = SimEnv::new(SyntheticCatalog::default().generate(), ProfileSet::presets());
    let cfg = TrialConfig { duration_s: 250.0, ..Default::default() };
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    for trials in [8, 32] {
        group.bench_with_input(BenchmarkId::new("sequential", trials), &trials, |b, &n| {
            b.iter(|| monte_carlo_sequential(black_box(&cfg), n, true, &env).unwrap())
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", trials), &trials, |b, &n| {
            b.iter(|| crater_trn::sim::monte_carlo_parallel(black_box(&cfg), n, true, &env).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, batches);
criterion_main!(benches);
