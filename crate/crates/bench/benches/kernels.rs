use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use noisy_trotter::linalg::trace_norm_hermitian;
use noisy_trotter::planner::{gamma_star, optimal_r};
use noisy_trotter::trotter::StepKernel;
use noisy_trotter::{
    build_schedule, build_tfi, haar_random_state, ErrorModel, ErrorTracker, MetricOptions, NoiseSpec, NoisyCircuit,
};

fn trace_norm(c: &mut Criterion) {
    let mut g = c.benchmark_group("trace_norm_hermitian");
    for n in [4usize, 6, 8] {
        let a = haar_random_state(n, 1).unwrap();
        let b = haar_random_state(n, 2).unwrap();
        let mut d = a.matrix().clone();
        d.add_scaled(b.matrix(), (-1.0).into());
        g.bench_with_input(BenchmarkId::from_parameter(n), &d, |bch, d| {
            bch.iter(|| trace_norm_hermitian(black_box(d)).unwrap())
        });
    }
    g.finish();
}

fn circuit_parts(c: &mut Criterion) {
    for n in [6usize, 8, 10] {
        let h = build_tfi(n, 2.0, 1.0, true).unwrap();
        let schedule = build_schedule(2, h.n_groups()).unwrap();
        let circuit = NoisyCircuit::new(&h, &schedule, 100, n as f64, NoiseSpec::depolarizing(0.005)).unwrap();
        let kernel = StepKernel::new(&h, &schedule, 0.1).unwrap();
        let rho = haar_random_state(n, 3).unwrap().into_matrix();

        c.bench_with_input(BenchmarkId::new("pauli_rotations_step", n), &rho, |bch, rho| {
            bch.iter_batched_ref(|| rho.clone(), |m| kernel.apply(m), criterion::BatchSize::LargeInput)
        });
        c.bench_with_input(BenchmarkId::new("noise_layer", n), &rho, |bch, rho| {
            bch.iter_batched_ref(|| rho.clone(), |m| circuit.apply_noise(m), criterion::BatchSize::LargeInput)
        });
        c.bench_with_input(BenchmarkId::new("noisy_step", n), &rho, |bch, rho| {
            bch.iter_batched_ref(|| rho.clone(), |m| circuit.step(m), criterion::BatchSize::LargeInput)
        });
    }
}

fn tracked_run(c: &mut Criterion) {
    let n = 6;
    let h = build_tfi(n, 2.0, 1.0, true).unwrap();
    let schedule = build_schedule(2, h.n_groups()).unwrap();
    let tracker = ErrorTracker::new(&h, &schedule, 20, 2.0, NoiseSpec::depolarizing(0.005)).unwrap();
    let rho0 = noisy_trotter::DensityMatrix::zero_state(n);
    let mut g = c.benchmark_group("tracked_run_n6_r20");
    g.sample_size(10);
    g.bench_function("full_metrics", |bch| bch.iter(|| tracker.run(&rho0, MetricOptions::default()).unwrap()));
    g.finish();
}

fn planner(c: &mut Criterion) {
    let m = ErrorModel::new(14.9, 0.5, 20.7, 0.5, 2, 1, 10);
    c.bench_function("optimal_r", |b| b.iter(|| optimal_r(black_box(&m), 5e-6, 10.0).unwrap()));
    c.bench_function("gamma_star", |b| b.iter(|| gamma_star(black_box(&m), 0.1, 10.0).unwrap()));
}

criterion_group!(benches, trace_norm, circuit_parts, tracked_run, planner);
criterion_main!(benches);
