//! Benchmarks along the library's hot paths: single theta-family
//! evaluations, pair-table construction, operator application, a full
//! identity residual, the finite-difference oracle, and one sweep cell.

use criterion::{criterion_group, criterion_main, Criterion};
use ecs_core::verifier::verify_main;
use ecs_core::{
    elliptic, oracle, Configuration, CouplingFamily, FdScheme, ModulusParams, PairTables,
    SweepGrid,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn fixture(n: usize, m: usize) -> Configuration {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    Configuration::sample(n, m, 0.1, &mut rng).expect("fixture samples")
}

fn bench_scalar_kernels(c: &mut Criterion) {
    let p = ModulusParams::from_q(0.5).unwrap();
    c.bench_function("theta at q = 0.5", |b| {
        b.iter(|| elliptic::theta(black_box(1.3), &p))
    });
    c.bench_function("phi at q = 0.5", |b| {
        b.iter(|| elliptic::phi(black_box(1.3), &p))
    });
    c.bench_function("potential at q = 0.5", |b| {
        b.iter(|| elliptic::potential_v(black_box(1.3), &p))
    });
}

fn bench_pair_tables(c: &mut Criterion) {
    let p = ModulusParams::from_q(0.5).unwrap();
    let cfg = fixture(5, 3);
    c.bench_function("pair tables N=5 M=3", |b| {
        b.iter(|| PairTables::new(black_box(&cfg), &p).unwrap())
    });
}

fn bench_apply_h(c: &mut Criterion) {
    let p = ModulusParams::from_q(0.5).unwrap();
    let cfg = fixture(5, 3);
    let g = CouplingFamily::Main.coupling(1.5).unwrap();
    let tables = PairTables::new(&cfg, &p).unwrap();
    c.bench_function("apply Hamiltonian N=5 M=3", |b| {
        b.iter(|| tables.apply_h(black_box(&g), &p))
    });
}

fn bench_identity_residual(c: &mut Criterion) {
    let p = ModulusParams::from_q(0.5).unwrap();
    let cfg = fixture(5, 3);
    c.bench_function("identity residual N=5 M=3", |b| {
        b.iter(|| verify_main(black_box(&cfg), 1.5, &p).unwrap())
    });
}

fn bench_fd_oracle(c: &mut Criterion) {
    let p = ModulusParams::from_q(0.5).unwrap();
    let cfg = fixture(3, 2);
    let g = CouplingFamily::Main.coupling(1.5).unwrap();
    let scheme = FdScheme::default();
    c.bench_function("finite-difference oracle N=3 M=2", |b| {
        b.iter(|| oracle::fd_apply_h(black_box(&cfg), &g, &p, &scheme).unwrap())
    });
}

fn bench_sweep_cell(c: &mut Criterion) {
    let grid = SweepGrid {
        cells: Some(vec![(3, 2)]),
        lambdas: vec![1.5],
        qs: vec![0.5],
        configs_per_cell: 5,
        ..SweepGrid::default()
    };
    c.bench_function("sweep cell N=3 M=2", |b| {
        b.iter(|| ecs_core::sweep(black_box(&grid)))
    });
}

criterion_group!(
    benches,
    bench_scalar_kernels,
    bench_pair_tables,
    bench_apply_h,
    bench_identity_residual,
    bench_fd_oracle,
    bench_sweep_cell
);
criterion_main!(benches);
