use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use crater_trn::detect::{detect_from_mask, render_rim_mask, MaskPipelineParams, Ring};

fn pipeline(c: &mut Criterion) {
    let rings: Vec<Ring> = (0..4)
        .flat_map(|i| (0..4).map(move |j| Ring { u: 32.0 + 64.0 * i as f64, v: 32.0 + 64.0 * j as f64, radius: 10.0 + 4.0 * (i + j) as f64 }))
        .collect();
    let mask = render_rim_mask(256, 256, &rings, 3.0, 255).unwrap();
    let params = MaskPipelineParams::default();
    c.bench_function("detect_from_mask 16 rings", |b| b.iter(|| detect_from_mask(black_box(&mask), &params)));
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
