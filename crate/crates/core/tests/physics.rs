use noisy_trotter::linalg::{spectral_norm, trace_norm_hermitian};
use noisy_trotter::metrics::{
    burn_in, commutator_form_error, entropy_ratio, one_step_algorithmic_error, physical_error_bound,
    worst_case_trotter_bound, MetricOptions,
};
use noisy_trotter::noise::{apply_noise_layer, diamond_distance_pauli, NoiseSpec, Placement};
use noisy_trotter::state::{random_mixed_state, relative_entropy, relative_entropy_to_mixed};
use noisy_trotter::trotter::{build_schedule, multiplicative_error_operator, step_unitary, ExactPropagator};
use noisy_trotter::{
    build_powerlaw_heisenberg, build_tfi, haar_random_state, partial_trace, von_neumann_entropy,
    ComplexMatrix, DensityMatrix, ErrorTracker, NoisyCircuit, Retention, C64,
};

fn tfi(n: usize) -> noisy_trotter::GroupedHamiltonian {
    build_tfi(n, 2.0, 1.0, true).unwrap()
}

#[test]
fn pinsker_inequality_on_random_pairs() {
    for k in 0..100 {
        let rho = random_mixed_state(2, 2 * k).unwrap();
        let sigma = random_mixed_state(2, 2 * k + 1).unwrap();
        let d_nats = relative_entropy(&rho, &sigma).unwrap() * std::f64::consts::LN_2;
        let dist = trace_norm_hermitian(&(rho.matrix() - sigma.matrix())).unwrap();
        assert!(d_nats + 1e-12 >= 0.5 * dist * dist, "pair {k}");
    }
}

#[test]
fn shearer_bound_on_leave_one_out_entropies() {
    for seed in 0..20 {
        let rho = random_mixed_state(3, 100 + seed).unwrap();
        let s = von_neumann_entropy(&rho).unwrap();
        let sum: f64 = (0..3)
            .map(|j| von_neumann_entropy(&partial_trace(&rho, &[j]).unwrap()).unwrap())
            .sum();
        assert!(sum + 1e-10 >= 2.0 * s);
        let ratio = entropy_ratio(&rho).unwrap().unwrap();
        assert!((1.0 / 3.0 - 1e-9..=1.0 + 1e-9).contains(&ratio));
    }
}

#[test]
fn product_pure_state_ratio_is_one_over_n() {
    for n in 2..=5 {
        let r = entropy_ratio(&DensityMatrix::zero_state(n)).unwrap().unwrap();
        assert!((r - 1.0 / n as f64).abs() < 1e-9);
        let r = entropy_ratio(&DensityMatrix::plus_state(n)).unwrap().unwrap();
        assert!((r - 1.0 / n as f64).abs() < 1e-9);
    }
    assert!(entropy_ratio(&DensityMatrix::maximally_mixed(3)).unwrap().is_none());
}

#[test]
fn haar_states_average_to_maximally_mixed() {
    let n = 2;
    let mut acc = ComplexMatrix::zeros(4);
    let samples = 1000;
    for seed in 0..samples {
        acc.add_scaled(haar_random_state(n, seed).unwrap().matrix(), C64::new(1.0 / samples as f64, 0.0));
    }
    let dev = acc.max_abs_diff(DensityMatrix::maximally_mixed(n).matrix());
    assert!(dev <= 0.05, "deviation {dev}");
    // distinct seeds give distinct states, equal seeds identical ones
    assert_ne!(haar_random_state(n, 1).unwrap(), haar_random_state(n, 2).unwrap());
    assert_eq!(haar_random_state(n, 3).unwrap(), haar_random_state(n, 3).unwrap());
}

#[test]
fn trajectories_preserve_trace_and_positivity() {
    let h = tfi(4);
    for spec in [
        NoiseSpec::depolarizing(0.01),
        NoiseSpec::dephasing(0.02),
        NoiseSpec::amplitude_damping(0.03),
        NoiseSpec::pauli(0.01, 0.002, 0.005).with_placement(Placement::PerLayer),
    ] {
        let circ = NoisyCircuit::new(&h, &build_schedule(2, 2).unwrap(), 12, 2.0, spec).unwrap();
        let traj = circ.run(&haar_random_state(4, 5).unwrap(), Retention::All).unwrap();
        for s in &traj.states {
            assert!((s.trace().re - 1.0).abs() < 1e-12);
            assert!(s.matrix().hermitian_deviation() < 1e-12);
            assert!(s.min_eigenvalue().unwrap() > -1e-12);
        }
    }
}

#[test]
fn amplitude_damping_is_not_unital() {
    let mixed = DensityMatrix::maximally_mixed(2);
    let out = apply_noise_layer(&mixed, &NoiseSpec::amplitude_damping(0.1)).unwrap();
    assert!(out.matrix().max_abs_diff(mixed.matrix()) > 1e-3);
    let out = apply_noise_layer(&mixed, &NoiseSpec::depolarizing(0.1)).unwrap();
    assert!(out.matrix().max_abs_diff(mixed.matrix()) < 1e-14);
    // the ground state is a fixed point
    let zero = DensityMatrix::zero_state(2);
    let out = apply_noise_layer(&zero, &NoiseSpec::amplitude_damping(0.1)).unwrap();
    assert!(out.matrix().max_abs_diff(zero.matrix()) < 1e-14);
}

#[test]
fn entropy_contracts_under_depolarizing_trajectory() {
    let (n, gamma) = (4, 0.02);
    let h = tfi(n);
    let tracker = ErrorTracker::new(&h, &build_schedule(2, 2).unwrap(), 20, 4.0, NoiseSpec::depolarizing(gamma)).unwrap();
    let trace = tracker.run(&DensityMatrix::zero_state(n), MetricOptions::default()).unwrap();
    let d0 = trace.rel_entropy_initial;
    assert!((d0 - n as f64).abs() < 1e-9);
    for r in &trace.records {
        assert!(r.rel_entropy <= (1.0 - gamma).powi(r.step as i32) * d0 + 1e-9);
        assert!((1.0 / n as f64 - 1e-9..=1.0 + 1e-9).contains(&r.entropy_ratio));
    }
}

#[test]
fn step_errors_respect_worst_case_bounds() {
    let (n, gamma, r, t) = (4, 0.01, 10, 4.0);
    let h = tfi(n);
    let schedule = build_schedule(2, 2).unwrap();
    let tracker = ErrorTracker::new(&h, &schedule, r, t, NoiseSpec::depolarizing(gamma)).unwrap();
    let trace = tracker.run(&DensityMatrix::plus_state(n), MetricOptions::default()).unwrap();
    let bounds = worst_case_trotter_bound(&h, 2, t / r as f64, gamma).unwrap();
    assert!((bounds.phys_bound - physical_error_bound(n, gamma)).abs() < 1e-15);
    for rec in &trace.records {
        assert!(rec.phys <= bounds.phys_bound + 1e-10);
        assert!(rec.alg <= 2.0 * bounds.alg_empirical + 1e-10);
        assert!(rec.tot <= rec.phys + rec.alg + 1e-10);
    }
    // the commutator bound dominates the measured operator distance
    assert!(bounds.alg_empirical <= bounds.alg_commutator.unwrap() + 1e-12);
    // accumulated error never exceeds the sum of per-step errors
    assert!(trace.acc_direct <= trace.acc_sum + 1e-10);
}

#[test]
fn physical_error_bound_is_the_diamond_distance() {
    for n in 1..=4 {
        let d = diamond_distance_pauli(&NoiseSpec::depolarizing(0.01), &NoiseSpec::noiseless(), n).unwrap();
        assert!((d - physical_error_bound(n, 0.01)).abs() < 1e-12);
    }
    assert!(diamond_distance_pauli(&NoiseSpec::amplitude_damping(0.1), &NoiseSpec::noiseless(), 2).is_err());
}

#[test]
fn commutator_form_matches_direct_difference() {
    let h = build_powerlaw_heisenberg(3, 2.0, &[0.3, -0.2, 0.5]).unwrap();
    let prop = ExactPropagator::new(&h).unwrap();
    let schedule = build_schedule(2, h.n_groups()).unwrap();
    for (k, dt) in [0.05, 0.1, 0.3].into_iter().enumerate() {
        let u = prop.unitary(dt);
        let pf = step_unitary(&h, &schedule, dt).unwrap();
        let m = multiplicative_error_operator(&u, &pf).unwrap();
        let rho = random_mixed_state(3, 40 + k as u64).unwrap();
        let direct = one_step_algorithmic_error(&rho, &u, &pf).unwrap();
        assert!((direct - commutator_form_error(&rho, &m).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn product_formula_orders_scale_correctly() {
    let h = tfi(4);
    let prop = ExactPropagator::new(&h).unwrap();
    for p in [1, 2, 4] {
        let schedule = build_schedule(p, 2).unwrap();
        let dts = [0.2, 0.1, 0.05, 0.025];
        let errs: Vec<f64> = dts
            .iter()
            .map(|&dt| spectral_norm(&(&step_unitary(&h, &schedule, dt).unwrap() - &prop.unitary(dt))).unwrap())
            .collect();
        let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let slope = noisy_trotter::fitting::linear_fit(&xs, &ys).slope;
        assert!((slope - (p as f64 + 1.0)).abs() < 0.1, "p={p} slope={slope}");
    }
}

#[test]
fn second_order_formula_is_time_symmetric() {
    let h = build_powerlaw_heisenberg(3, 1.5, &[0.1, 0.2, 0.3]).unwrap();
    let schedule = build_schedule(2, 3).unwrap();
    let fwd = step_unitary(&h, &schedule, 0.17).unwrap();
    let bwd = step_unitary(&h, &schedule, -0.17).unwrap();
    assert!(fwd.matmul(&bwd).max_abs_diff(&ComplexMatrix::identity(8)) < 1e-12);
}

#[test]
fn exact_propagator_is_a_group() {
    let h = tfi(3);
    let prop = ExactPropagator::new(&h).unwrap();
    let lhs = prop.unitary(0.3).matmul(&prop.unitary(0.5));
    assert!(lhs.max_abs_diff(&prop.unitary(0.8)) < 1e-12);
}

#[test]
fn tfi_is_linear_in_couplings() {
    let a = build_tfi(4, 2.0, 1.0, true).unwrap().to_matrix().unwrap();
    let b = build_tfi(4, 4.0, 2.0, true).unwrap().to_matrix().unwrap();
    assert!(a.scale(C64::new(2.0, 0.0)).max_abs_diff(&b) < 1e-14);
    let j_only = build_tfi(4, 2.0, 0.0, true).unwrap().to_matrix().unwrap();
    let h_only = build_tfi(4, 0.0, 1.0, true).unwrap().to_matrix().unwrap();
    assert!((&j_only + &h_only).max_abs_diff(&a) < 1e-14);
    assert!(a.hermitian_deviation() < 1e-14);
}

#[test]
fn noiseless_circuit_has_no_physical_error() {
    let h = tfi(3);
    let tracker = ErrorTracker::new(&h, &build_schedule(1, 2).unwrap(), 5, 1.0, NoiseSpec::noiseless()).unwrap();
    let trace = tracker.run(&DensityMatrix::zero_state(3), MetricOptions::default()).unwrap();
    for r in &trace.records {
        assert!(r.phys.abs() < 1e-14);
        assert!((r.tot - r.alg).abs() < 1e-12);
        assert!((r.rel_entropy - 3.0).abs() < 1e-9);
    }
}

#[test]
fn relative_entropy_to_mixed_is_n_minus_entropy() {
    let rho = random_mixed_state(3, 9).unwrap();
    let d = relative_entropy_to_mixed(&rho).unwrap();
    assert!((d - (3.0 - von_neumann_entropy(&rho).unwrap())).abs() < 1e-10);
}

#[test]
fn burn_in_rule() {
    assert_eq!(burn_in(10), 5);
    assert_eq!(burn_in(100), 10);
    assert_eq!(burn_in(101), 11);
}
