use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use locfin::{
    build_back_and_forth, k0_equal, k0_positive, r_components, BlockSpace, FiniteMetricSpace,
    K0Class, Tower,
};
use locfin_bench::mixed_tower;
use std::hint::black_box;

fn k0(c: &mut Criterion) {
    let t = mixed_tower();
    let period: Vec<i64> = (0..30).map(|i| (i % 7) - 3).collect();
    let a = K0Class::from_parts(&t, &[1, -2, 3], &period).unwrap();
    let shifted: Vec<i64> = period.iter().rev().copied().collect();
    let b = K0Class::from_parts(&t, &[], &shifted).unwrap();
    c.bench_function("k0_equal mixed", |bench| bench.iter(|| k0_equal(black_box(&a), black_box(&b)).unwrap()));
    let unit_like = K0Class::from_parts(&t, &[4, 0, 1], &[1, 2, 0]).unwrap();
    c.bench_function("k0_positive mixed", |bench| bench.iter(|| k0_positive(black_box(&unit_like)).unwrap()));
}

fn back_and_forth(c: &mut Criterion) {
    let mut group = c.benchmark_group("back_and_forth");
    let a = Tower::from_ratios(&[3], &[4]).unwrap();
    let b = Tower::from_ratios(&[6], &[2]).unwrap();
    for depth in 1..=3 {
        group.bench_with_input(BenchmarkId::from_parameter(depth), &depth, |bench, &d| {
            bench.iter(|| build_back_and_forth(black_box(&a), black_box(&b), d).unwrap())
        });
    }
    group.finish();
}

fn components(c: &mut Criterion) {
    let s = BlockSpace::new(Tower::periodic(&[2]).unwrap(), 8).unwrap();
    let m = FiniteMetricSpace::from_block_space(&s);
    let mut group = c.benchmark_group("r_components 256 points");
    for radius in [0u64, 4, 8] {
        group.bench_with_input(BenchmarkId::from_parameter(radius), &radius, |bench, &r| {
            bench.iter(|| r_components(black_box(&m), r))
        });
    }
    group.finish();
}

criterion_group!(benches, k0, back_and_forth, components);
criterion_main!(benches);
