use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use outlierkit_bench::sample;
use outlierkit_core::estimators::{mean_sd_fit, qn_scale, qn_scale_brute, robust_fit};
use outlierkit_core::Family;

fn qn(c: &mut Criterion) {
    let mut g = c.benchmark_group("qn");
    for n in [50, 200, 1000] {
        let x = sample(Family::Normal, n, 1);
        g.bench_with_input(BenchmarkId::new("fast", n), &x, |b, x| b.iter(|| qn_scale(black_box(x), Family::Normal)));
        if n <= 200 {
            g.bench_with_input(BenchmarkId::new("brute", n), &x, |b, x| {
                b.iter(|| qn_scale_brute(black_box(x), Family::Normal))
            });
        }
    }
    g.finish();
}

fn fits(c: &mut Criterion) {
    let x = sample(Family::Logistic, 1000, 2);
    c.bench_function("robust_fit/1000", |b| b.iter(|| robust_fit(black_box(&x), Family::Logistic)));
    c.bench_function("mean_sd_fit/1000", |b| b.iter(|| mean_sd_fit(black_box(&x))));
}

criterion_group!(benches, qn, fits);
criterion_main!(benches);
