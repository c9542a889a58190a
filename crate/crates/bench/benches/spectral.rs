use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use metpart::spectral::{eigenvalues, fem_eigenvalues, FemOptions, Method};
use metpart_bench::spectral_cases;
use std::hint::black_box;

fn secular(c: &mut Criterion) {
    let mut group = c.benchmark_group("secular");
    for (name, g) in spectral_cases() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &g, |b, g| {
            b.iter(|| eigenvalues(black_box(g), 10, Method::Secular).unwrap())
        });
    }
    group.finish();
}

fn fem(c: &mut Criterion) {
    let mut group = c.benchmark_group("fem");
    group.sample_size(10);
    for (name, g) in spectral_cases() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &g, |b, g| {
            b.iter(|| fem_eigenvalues(black_box(g), 10, &FemOptions::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, secular, fem);
criterion_main!(benches);
