use std::hint::black_box;
use std::time::Duration;

use annulus_gaf::gaf::{self, Model, Truncation};
use annulus_gaf::roots::{self, Method};
use annulus_gaf::Complex;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn root_solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("roots");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    let model = Model::annulus(0.3, 0.6).unwrap();
    for margin in [0.15, 0.08, 0.04] {
        let trunc = Truncation::for_margin(&model, margin).unwrap();
        let sample = gaf::sample(&model, trunc, 1, 0);
        let coeffs: Vec<Complex> = sample.coeffs().to_vec();
        let degree = trunc.degree();
        group.bench_with_input(BenchmarkId::new("aberth", degree), &coeffs, |b, c| b.iter(|| roots::roots_with(black_box(c), Method::Aberth)));
        if degree <= 200 {
            group.bench_with_input(BenchmarkId::new("companion", degree), &coeffs, |b, c| {
                b.iter(|| roots::roots_with(black_box(c), Method::Companion))
            });
        }
    }
    group.finish();
}

fn zero_sets(c: &mut Criterion) {
    let mut group = c.benchmark_group("find_zeros");
    group.sample_size(10);
    let model = Model::annulus(0.3, 0.3).unwrap();
    let trunc = Truncation::for_margin(&model, 0.1).unwrap();
    let sample = gaf::sample(&model, trunc, 2, 0);
    group.bench_function("q0.3_margin0.1", |b| b.iter(|| gaf::find_zeros(black_box(&sample), 0.1)));
    group.finish();
}

criterion_group!(benches, root_solvers, zero_sets);
criterion_main!(benches);
