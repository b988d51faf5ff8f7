use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stairmps::analytic::chi2_mps_to_layer;
use stairmps::linalg::{closest_unitary, random_complex_matrix, svd, to_matrix4};
use stairmps::sweep::{local_update, Scope, SweepConfig};
use stairmps::{sweep_optimize, Backend, StateVector};
use stairmps_bench::{circuit, target};

fn dense_kernels(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("svd");
    for (rows, cols) in [(4, 4), (128, 128), (128, 256)] {
        let a = random_complex_matrix(rows, cols, &mut rng);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{rows}x{cols}")), &a, |b, a| {
            b.iter(|| svd(black_box(a)).unwrap())
        });
    }
    group.finish();

    let f = random_complex_matrix(4, 4, &mut rng);
    let u = to_matrix4(&closest_unitary(&random_complex_matrix(4, 4, &mut rng)).unwrap().unitary).unwrap();
    let f4 = to_matrix4(&f).unwrap();
    c.bench_function("polar_4x4", |b| b.iter(|| closest_unitary(black_box(&f)).unwrap()));
    c.bench_function("local_update_r0.6", |b| {
        b.iter(|| local_update(black_box(&u), black_box(&f4), 0.6).unwrap())
    });
}

fn gate_application(c: &mut Criterion) {
    let psi = target(12, 64);
    let layer = circuit(12, 1);
    let gate = *layer.gate(0).matrix();
    let mut group = c.benchmark_group("two_qubit_gate_n12_chi64");
    group.bench_function("mps_middle", |b| {
        b.iter_batched(
            || psi.clone(),
            |mut s| s.apply_two_qubit_gate(&gate, 5, None, false).unwrap(),
            criterion::BatchSize::SmallInput,
        )
    });
    let dense = StateVector::from_mps(&psi).unwrap();
    group.bench_function("dense_middle", |b| {
        b.iter_batched(
            || dense.clone(),
            |mut s| s.apply_gate(&gate, 5, false).unwrap(),
            criterion::BatchSize::SmallInput,
        )
    });
    group.finish();

    let chi2 = target(12, 2);
    c.bench_function("chi2_mps_to_layer_n12", |b| b.iter(|| chi2_mps_to_layer(black_box(&chi2)).unwrap()));
}

fn sweeps(c: &mut Criterion) {
    let psi = target(12, 64);
    let start = circuit(12, 2);
    let mut group = c.benchmark_group("one_sweep_n12_k2");
    group.sample_size(10);
    for backend in [Backend::Dense, Backend::Mps] {
        let cfg = SweepConfig {
            target_fidelity: None,
            backend,
            coherence_probes: 0,
            ..SweepConfig::with_sweeps(1, 0.6)
        };
        group.bench_function(format!("{backend:?}").to_lowercase(), |b| {
            b.iter(|| sweep_optimize(&start, &psi, &cfg, &Scope::All).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, dense_kernels, gate_application, sweeps);
criterion_main!(benches);
