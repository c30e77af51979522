use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use dominion::builtin::{spring_system, SPRING_INITIAL_CONDITIONS};
use dominion::{build_decoupling, integrate, nsd_margin, ChangOptions};
use dominion_bench::{random_blocks, random_symmetric};

fn eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("jacobi_eigen");
    for n in [2, 8, 32] {
        let s = random_symmetric(n, 11);
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| b.iter(|| nsd_margin(black_box(s))));
    }
    group.finish();
}

fn chang(c: &mut Criterion) {
    let mut group = c.benchmark_group("chang_decoupling");
    let opts = ChangOptions::default();
    for (n_r, n_f) in [(2, 1), (6, 4)] {
        let blocks = random_blocks(n_r, n_f, 3);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{n_r}+{n_f}")), &blocks, |b, blocks| {
            b.iter(|| build_decoupling(black_box(blocks), 0.01, &opts).unwrap())
        });
    }
    group.finish();
}

fn simulate(c: &mut Criterion) {
    let sys = spring_system(0.01).unwrap();
    let x0 = SPRING_INITIAL_CONDITIONS[0];
    let mut group = c.benchmark_group("rk4");
    group.sample_size(20);
    group.bench_function("spring_t1", |b| b.iter(|| integrate(&sys, black_box(&x0), (0.0, 1.0), None).unwrap()));
    group.finish();
}

criterion_group!(benches, eigen, chang, simulate);
criterion_main!(benches);
