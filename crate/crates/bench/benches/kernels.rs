use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use fracnash_core::gallery::{build, GeneratorSpec};
use fracnash_core::nash::{log_u, rate_from_profile, DecayProfile, RateFunction};
use fracnash_core::ou::gauss_hermite;
use fracnash_core::subordination::{subordinate_semigroup, StableSubordinator};
use fracnash_core::torus::{log_density_at_e, TorusClassifier, TorusSpectrum};

fn subordination(c: &mut Criterion) {
    let mut g = c.benchmark_group("subordination");
    let sub = StableSubordinator::new(0.7, 1.0).unwrap();
    g.bench_function("stable_density", |b| b.iter(|| sub.density(black_box(0.8)).unwrap()));
    for n in [16usize, 64] {
        let op = build(&GeneratorSpec::cycle(n)).unwrap();
        g.bench_with_input(BenchmarkId::new("semigroup_cycle", n), &op, |b, op| {
            b.iter(|| subordinate_semigroup(op, 0.5, black_box(1.0)).unwrap())
        });
    }
    g.finish();
}

fn rates(c: &mut Criterion) {
    let mut g = c.benchmark_group("rates");
    let p = DecayProfile::stretched_exp(1.0);
    g.bench_function("rate_from_profile", |b| b.iter(|| rate_from_profile(&p, black_box(1e4)).unwrap()));
    let closed = RateFunction::polynomial_family(2.0);
    g.bench_function("log_u_closed_rate", |b| b.iter(|| log_u(&closed, black_box(0.1)).unwrap()));
    g.finish();
}

fn torus(c: &mut Criterion) {
    let mut g = c.benchmark_group("torus");
    g.sample_size(20);
    let spec = TorusSpectrum::new(1.0, 100_000).unwrap();
    g.bench_function("log_density_at_e", |b| b.iter(|| log_density_at_e(&spec, black_box(0.01)).unwrap()));
    let clf = TorusClassifier::new(TorusSpectrum::new(1.0, 20_000).unwrap()).unwrap();
    g.bench_function("classify", |b| b.iter(|| clf.classify(0.5, black_box(1.0)).unwrap()));
    g.finish();
}

fn quadrature(c: &mut Criterion) {
    let mut g = c.benchmark_group("gauss_hermite");
    for q in [32usize, 128] {
        g.bench_with_input(BenchmarkId::from_parameter(q), &q, |b, &q| b.iter(|| gauss_hermite(black_box(q))));
    }
    g.finish();
}

criterion_group!(benches, subordination, rates, torus, quadrature);
criterion_main!(benches);
