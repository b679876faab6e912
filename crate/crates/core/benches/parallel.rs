//! Compares the data-parallel inner loops against their sequential twins.
//!
//! Build with the default `parallel` feature to see the speedup; without it
//! the public entry points fall back to the same sequential code, so both
//! sides of each group measure alike.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use omicfuse::featsel::{welch_scan, welch_scan_seq};
use omicfuse::{Matrix, RngHandle};

fn random_matrix(rows: usize, cols: usize, rng: &mut RngHandle) -> Matrix {
    rng.standard_normal_matrix(rows, cols)
}

fn bench_matmul(c: &mut Criterion) {
    let mut rng = RngHandle::new(99);
    let mut group = c.benchmark_group("matmul");
    for &(m, k, n) in &[(64usize, 128usize, 32usize), (256, 512, 128)] {
        let a = random_matrix(m, k, &mut rng);
        let b = random_matrix(k, n, &mut rng);
        let id = format!("{m}x{k}x{n}");
        group.bench_with_input(BenchmarkId::new("parallel", &id), &(&a, &b), |bch, (a, b)| {
            bch.iter(|| black_box(a.matmul(b).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("sequential", &id), &(&a, &b), |bch, (a, b)| {
            bch.iter(|| black_box(a.matmul_seq(b).unwrap()))
        });
    }
    group.finish();
}

fn bench_matmul_transpose(c: &mut Criterion) {
    let mut rng = RngHandle::new(100);
    let mut group = c.benchmark_group("matmul_transpose");
    for &(m, k, n) in &[(64usize, 128usize, 32usize), (256, 512, 128)] {
        let a = random_matrix(m, k, &mut rng);
        let bt = random_matrix(n, k, &mut rng);
        let id = format!("{m}x{k}x{n}");
        group.bench_with_input(
            BenchmarkId::new("parallel", &id),
            &(&a, &bt),
            |bch, (a, bt)| bch.iter(|| black_box(a.matmul_transpose(bt).unwrap())),
        );
        group.bench_with_input(
            BenchmarkId::new("sequential", &id),
            &(&a, &bt),
            |bch, (a, bt)| bch.iter(|| black_box(a.matmul_transpose_seq(bt).unwrap())),
        );
    }
    group.finish();
}

fn bench_welch_scan(c: &mut Criterion) {
    let mut rng = RngHandle::new(101);
    let mut group = c.benchmark_group("welch_scan");
    for &features in &[500usize, 5000] {
        let matrix = random_matrix(200, features, &mut rng);
        let labels: Vec<u8> = (0..200).map(|i| u8::from(i % 5 == 0)).collect();
        let id = format!("200x{features}");
        group.bench_with_input(
            BenchmarkId::new("parallel", &id),
            &(&matrix, &labels),
            |bch, (m, l)| bch.iter(|| black_box(welch_scan(m, l).unwrap())),
        );
        group.bench_with_input(
            BenchmarkId::new("sequential", &id),
            &(&matrix, &labels),
            |bch, (m, l)| bch.iter(|| black_box(welch_scan_seq(m, l).unwrap())),
        );
    }
    group.finish();
}

criterion_group!(benches, bench_matmul, bench_matmul_transpose, bench_welch_scan);
criterion_main!(benches);
