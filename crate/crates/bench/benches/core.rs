use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use hecke_sphere::gon::{a_series, shell_class_count, successive_minima, CylinderSpec};
use hecke_sphere::hecke::{hecke_matrix, joint_eigenspaces};
use hecke_sphere::moments::{gaussian_grid, moment_sweep};
use hecke_sphere::poly::{harmonic_basis, Precision};
use hecke_sphere::quat::enumerate_shell;
use hecke_sphere::theta::petersson_estimate;
use hecke_sphere::Parity;

fn shells(c: &mut Criterion) {
    let mut g = c.benchmark_group("enumerate_shell");
    for k in [25u64, 1000, 10_000] {
        g.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| enumerate_shell(black_box(k), Parity::Integral))
        });
    }
    g.finish();
}

fn hecke(c: &mut Criterion) {
    let mut g = c.benchmark_group("hecke_matrix");
    g.sample_size(10);
    for n in [4u32, 8] {
        let hb = harmonic_basis(n);
        g.bench_with_input(BenchmarkId::new("T15", n), &hb, |b, hb| b.iter(|| hecke_matrix(hb, 15).unwrap()));
    }
    g.finish();
}

fn spectral(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral");
    g.sample_size(10);
    let hb = harmonic_basis(8);
    g.bench_function("joint_eigenspaces n=8", |b| {
        b.iter(|| joint_eigenspaces(&hb, &[3, 5, 7], &[], 1, Precision::Double).unwrap())
    });
    let dec = joint_eigenspaces(&hb, &[3, 5, 7], &[], 1, Precision::Double).unwrap();
    let grid = gaussian_grid(1000, 1);
    g.bench_function("moment_sweep n=8 grid=1000", |b| b.iter(|| moment_sweep(&dec, &grid, 1).unwrap()));
    g.finish();
}

fn theta(c: &mut Criterion) {
    let mut g = c.benchmark_group("petersson");
    g.sample_size(10);
    for n in [16u32, 64] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| petersson_estimate(n, 10 * n as u64).unwrap())
        });
    }
    g.finish();
}

fn counting(c: &mut Criterion) {
    c.bench_function("shell_class_count k=4096 R=4", |b| b.iter(|| shell_class_count(black_box(4096), 4).unwrap()));
    c.bench_function("a_series n=128", |b| b.iter(|| a_series(128, 128)));
    let body = CylinderSpec::new(40.0, 2.0).unwrap();
    let basis = [[1, 1, 0, 0], [0, 2, 1, 0], [0, 0, 1, 3], [1, 0, 0, 2]];
    c.bench_function("successive_minima cylinder", |b| b.iter(|| successive_minima(&basis, &body).unwrap()));
}

criterion_group!(benches, shells, hecke, spectral, theta, counting);
criterion_main!(benches);
