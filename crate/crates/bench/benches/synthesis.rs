use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mincap_bench::grid;
use mincap_core::{instances, min_cap, min_cap_matrix};

fn reload_detour(c: &mut Criterion) {
    let m = instances::reload_detour_model();
    let (r, t) = (m.state("r").unwrap(), m.state("t").unwrap());
    c.bench_function("min_cap/reload_detour", |b| b.iter(|| min_cap(&m, r, t).unwrap()));
}

fn grid_pairs(c: &mut Criterion) {
    let mut group = c.benchmark_group("min_cap/grid");
    group.sample_size(10);
    for size in [10, 20] {
        let f = grid(size, 2, 0, 7);
        group.bench_with_input(BenchmarkId::from_parameter(size), &f, |b, f| {
            b.iter(|| min_cap(&f.model, f.targets[0], f.targets[1]).unwrap())
        });
    }
    group.finish();
}

fn matrices(c: &mut Criterion) {
    let mut group = c.benchmark_group("min_cap_matrix/grid20");
    group.sample_size(10);
    for targets in [5, 10] {
        let f = grid(20, targets, 3, 11);
        let all: Vec<_> = f.targets.iter().chain(&f.initials).copied().collect();
        group.bench_with_input(BenchmarkId::from_parameter(targets), &all, |b, all| {
            b.iter(|| min_cap_matrix(&f.model, all, all).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, reload_detour, grid_pairs, matrices);
criterion_main!(benches);
