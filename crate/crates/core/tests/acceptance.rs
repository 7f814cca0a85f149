//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Pass criterion numbers as arguments to run a subset.

use std::cell::OnceCell;
use std::process::ExitCode;
use std::time::Instant;

use noisy_trotter::fitting::{linear_fit, DecayFit};
use noisy_trotter::linalg::spectral_norm;
use noisy_trotter::metrics::{
    burn_in, commutator_form_error, empirical_trotter_bound, entropy_ratio, one_step_algorithmic_error,
    physical_error_bound, worst_case_algorithmic_prefactor,
};
use noisy_trotter::planner::{
    d_error_d_gamma, gamma_star_closed, model_accumulated_error, model_accumulated_error_direct,
    optimal_r_closed, phase_csv, phase_diagram,
};
use noisy_trotter::state::random_mixed_state;
use noisy_trotter::trotter::{multiplicative_error_operator, step_unitary, ExactPropagator};
use noisy_trotter::{
    build_schedule, build_tfi, extrapolate_in_n, fit_exponential_decay, fit_model_coefficients, ft_resources,
    haar_random_state, optimal_r, plan_comparison, DensityMatrix, ErrorModel, ErrorTrace, ErrorTracker, FitConfig,
    FtParams, GammaTrace, GroupedHamiltonian, MetricOptions, NoiseSpec, WorstCaseModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GAMMAS: [f64; 3] = [0.003, 0.005, 0.008];
const ORDER: usize = 2;
const STEPS: usize = 100;

type Outcome = Result<(bool, String), String>;

fn tfi(n: usize) -> GroupedHamiltonian {
    build_tfi(n, 2.0, 1.0, true).expect("TFI builds")
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Depolarizing traces from |0...0> on the γ grid.
fn depolarizing_traces(n: usize, time: f64, options: MetricOptions) -> Result<Vec<GammaTrace>, String> {
    let h = tfi(n);
    let schedule = build_schedule(ORDER, h.n_groups()).map_err(err)?;
    GAMMAS
        .iter()
        .map(|&gamma| {
            let tracker = ErrorTracker::new(&h, &schedule, STEPS, time, NoiseSpec::depolarizing(gamma)).map_err(err)?;
            let trace = tracker.run(&DensityMatrix::zero_state(n), options).map_err(err)?;
            Ok(GammaTrace { gamma, trace })
        })
        .collect()
}

/// The n = 10 trajectories shared by criteria 1-4 and 9.
struct Shared {
    traces: OnceCell<Result<Vec<GammaTrace>, String>>,
}

impl Shared {
    fn n10(&self) -> Result<&[GammaTrace], String> {
        let r = self.traces.get_or_init(|| {
            let start = Instant::now();
            let t = depolarizing_traces(10, 10.0, MetricOptions::default());
            eprintln!("  (n=10 depolarizing trajectories: {:.0} s)", start.elapsed().as_secs_f64());
            t
        });
        r.as_deref().map_err(Clone::clone)
    }
}

fn window_fits(trace: &ErrorTrace) -> Result<(DecayFit, DecayFit), String> {
    let w = burn_in(STEPS)..STEPS;
    let phys = fit_exponential_decay(&trace.phys_series(), w.clone()).map_err(err)?;
    let alg = fit_exponential_decay(&trace.alg_series(), w).map_err(err)?;
    Ok((phys, alg))
}

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] > w[0])
}

fn criterion_1(shared: &Shared) -> Outcome {
    let traces = shared.n10()?;
    let mut ok = true;
    let mut detail = Vec::new();
    let (mut kp, mut ka) = (Vec::new(), Vec::new());
    for gt in traces {
        let (p, a) = window_fits(&gt.trace)?;
        ok &= p.r_squared >= 0.9 && a.r_squared >= 0.9 && p.rate > 0.0 && a.rate > 0.0;
        detail.push(format!(
            "γ={}: phys R²={:.4} k={:.5}, alg R²={:.4} k={:.5}",
            gt.gamma, p.r_squared, p.rate, a.r_squared, a.rate
        ));
        kp.push(p.rate);
        ka.push(a.rate);
    }
    ok &= strictly_increasing(&kp) && strictly_increasing(&ka);
    Ok((ok, detail.join("; ")))
}

fn criterion_2(shared: &Shared) -> Outcome {
    let traces = shared.n10()?;
    let fits: Vec<(DecayFit, DecayFit)> = traces.iter().map(|gt| window_fits(&gt.trace)).collect::<Result<_, _>>()?;
    let alg: Vec<f64> = fits.iter().map(|f| f.1.prefactor).collect();
    let phys: Vec<f64> = fits.iter().map(|f| f.0.prefactor).collect();
    let mean = alg.iter().sum::<f64>() / alg.len() as f64;
    let spread = (alg.iter().cloned().fold(f64::MIN, f64::max) - alg.iter().cloned().fold(f64::MAX, f64::min)) / mean;
    let ok = spread < 0.2 && strictly_increasing(&phys);
    Ok((ok, format!("alg prefactors {:.4?} (spread {:.1}%), phys prefactors {:.4?}", alg, 100.0 * spread, phys)))
}

fn criterion_3(shared: &Shared) -> Outcome {
    let traces = shared.n10()?;
    let n = 10;
    let h = tfi(n);
    let schedule = build_schedule(ORDER, 2).map_err(err)?;
    let op = empirical_trotter_bound(&h, &schedule, 10.0 / STEPS as f64).map_err(err)?;
    let mut ok = true;
    let (mut worst_phys, mut worst_alg) = (0.0f64, 0.0f64);
    for gt in traces {
        let pb = physical_error_bound(n, gt.gamma);
        for r in &gt.trace.records {
            ok &= r.phys <= pb + 1e-10 && r.alg <= 2.0 * op + 1e-10;
            worst_phys = worst_phys.max(r.phys / pb);
            worst_alg = worst_alg.max(r.alg / (2.0 * op));
        }
    }
    Ok((
        ok,
        format!("max phys/bound = {worst_phys:.4}, max alg/bound = {worst_alg:.4} (||U-PF|| = {op:.4e})"),
    ))
}

fn criterion_4(shared: &Shared) -> Outcome {
    let traces = shared.n10()?;
    let n = 10;
    let mut ok = true;
    let (mut min_ratio, mut max_ratio, mut min_slack) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    for gt in traces {
        let d0 = gt.trace.rel_entropy_initial;
        for r in &gt.trace.records {
            let bound = (1.0 - gt.gamma).powi(r.step as i32) * d0;
            ok &= r.rel_entropy <= bound + 1e-9;
            min_slack = min_slack.min(bound - r.rel_entropy);
            ok &= r.entropy_ratio >= 1.0 / n as f64 - 1e-9 && r.entropy_ratio <= 1.0 + 1e-9;
            min_ratio = min_ratio.min(r.entropy_ratio);
            max_ratio = max_ratio.max(r.entropy_ratio);
        }
    }
    let mut pure_dev = 0.0f64;
    for k in 2..=8 {
        for rho in [DensityMatrix::zero_state(k), DensityMatrix::plus_state(k)] {
            let r = entropy_ratio(&rho).map_err(err)?.ok_or("undefined ratio on a pure state")?;
            pure_dev = pure_dev.max((r - 1.0 / k as f64).abs());
        }
    }
    ok &= pure_dev <= 1e-9;
    Ok((
        ok,
        format!(
            "min contraction slack {min_slack:.3e}, ratio range [{min_ratio:.4}, {max_ratio:.4}], product-pure deviation {pure_dev:.1e}"
        ),
    ))
}

fn criterion_5() -> Outcome {
    let h = tfi(4);
    let prop = ExactPropagator::new(&h).map_err(err)?;
    let dts = [0.2, 0.1, 0.05, 0.025];
    let mut ok = true;
    let mut detail = Vec::new();
    for p in [1, 2, 4] {
        let schedule = build_schedule(p, 2).map_err(err)?;
        let mut ys = Vec::new();
        for &dt in &dts {
            let pf = step_unitary(&h, &schedule, dt).map_err(err)?;
            ys.push(spectral_norm(&(&pf - &prop.unitary(dt))).map_err(err)?.ln());
        }
        let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
        let slope = linear_fit(&xs, &ys).slope;
        ok &= (slope - (p as f64 + 1.0)).abs() <= 0.1;
        detail.push(format!("p={p}: slope {slope:.4}"));
    }
    Ok((ok, detail.join(", ")))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = tfi(4);
    let prop = ExactPropagator::new(&h).map_err(err)?;
    let mut worst = 0.0f64;
    for k in 0..50 {
        let p = [1, 2, 4][k % 3];
        let dt = rng.random_range(0.01..0.5);
        let rho = if k % 2 == 0 {
            random_mixed_state(4, 1000 + k as u64).map_err(err)?
        } else {
            haar_random_state(4, 1000 + k as u64).map_err(err)?
        };
        let u = prop.unitary(dt);
        let pf = step_unitary(&h, &build_schedule(p, 2).map_err(err)?, dt).map_err(err)?;
        let m = multiplicative_error_operator(&u, &pf).map_err(err)?;
        let direct = one_step_algorithmic_error(&rho, &u, &pf).map_err(err)?;
        let comm = commutator_form_error(&rho, &m).map_err(err)?;
        worst = worst.max((direct - comm).abs());
    }
    Ok((worst <= 1e-9, format!("max |difference| = {worst:.2e} over 50 draws")))
}

fn random_model(rng: &mut ChaCha8Rng) -> ErrorModel {
    ErrorModel::new(
        rng.random_range(0.1..20.0),
        rng.random_range(0.0..2.0),
        rng.random_range(0.1..30.0),
        rng.random_range(0.0..2.0),
        rng.random_range(1..=2),
        rng.random_range(1..=4),
        10,
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // geometric sums
    let mut sum_dev = 0.0f64;
    for _ in 0..200 {
        let m = random_model(&mut rng);
        let (g, r, t) = (rng.random_range(1e-6..0.05), rng.random_range(1..2000), rng.random_range(0.5..20.0));
        let a = model_accumulated_error(&m, g, r, t);
        let b = model_accumulated_error_direct(&m, g, r, t);
        sum_dev = sum_dev.max((a - b).abs() / b.abs().max(1.0));
    }
    // integer optimum vs exhaustive scan
    let mut mismatches = 0;
    for _ in 0..50 {
        let m = random_model(&mut rng);
        let (g, t) = (rng.random_range(1e-4..0.05), rng.random_range(1.0..10.0));
        let opt = optimal_r(&m, g, t).map_err(err)?;
        let upper = (10.0 * opt.r_closed.ceil()).max(10.0) as usize;
        let scan = (1..=upper)
            .map(|r| (r, model_accumulated_error(&m, g, r, t)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        if scan != opt.r_int {
            mismatches += 1;
        }
    }
    // analytic derivative vs central differences
    let mut deriv_dev = 0.0f64;
    for _ in 0..100 {
        let m = random_model(&mut rng);
        let (g, r, t): (f64, usize, f64) = (rng.random_range(1e-4..0.02), rng.random_range(1..300), rng.random_range(1.0..10.0));
        let h = 1e-7;
        let fd = (model_accumulated_error(&m, g + h, r, t) - model_accumulated_error(&m, g - h, r, t)) / (2.0 * h);
        let an = d_error_d_gamma(&m, g, r, t);
        deriv_dev = deriv_dev.max((fd - an).abs() / an.abs().max(1e-8));
    }
    // low-order closed forms for the noise requirement
    let mut closed_dev = 0.0f64;
    for _ in 0..20 {
        let (c, b): (f64, f64) = (rng.random_range(0.1..20.0), rng.random_range(0.1..30.0));
        let (eps, t): (f64, f64) = (rng.random_range(0.01..0.5), rng.random_range(1.0..20.0));
        let m1 = ErrorModel::new(c, 0.0, b, 0.0, 1, 2, 10);
        let e1 = eps * eps / (8.0 * c * b * t * t);
        let m2 = ErrorModel::new(c, 0.0, b, 0.0, 2, 4, 10);
        let e2 = eps.powf(1.5) / (6.0 * 3f64.sqrt() * c * b.sqrt() * t.powf(1.5));
        closed_dev = closed_dev
            .max((gamma_star_closed(&m1, eps, t) - e1).abs() / e1)
            .max((gamma_star_closed(&m2, eps, t) - e2).abs() / e2);
        let r1 = 2.0 * b * t * t / eps;
        closed_dev = closed_dev.max((optimal_r_closed(&m1, e1, t) - r1).abs() / r1);
    }
    let ok = sum_dev <= 1e-12 && mismatches == 0 && deriv_dev <= 1e-5 && closed_dev <= 1e-10;
    Ok((
        ok,
        format!(
            "sum dev {sum_dev:.1e}, r_opt mismatches {mismatches}/50, derivative dev {deriv_dev:.1e}, closed-form dev {closed_dev:.1e}"
        ),
    ))
}

fn criterion_8() -> Outcome {
    let res = ft_resources(4.05e-6, &FtParams { gamma0: 0.02985, ratio: 0.5 }).map_err(err)?;
    let mut antitone = true;
    let mut prev = u64::MAX;
    for k in 0..20 {
        let g = 1e-12 * 10f64.powf(k as f64 * 9.0 / 19.0);
        let d = ft_resources(g, &FtParams::default()).map_err(err)?.d_c;
        antitone &= d <= prev;
        prev = d;
    }
    let ok = res.d_c == 27 && res.n_c == 729 && antitone;
    Ok((
        ok,
        format!("raw {:.3} -> d_c={} N_c={}, antitone: {antitone}", res.raw_distance, res.d_c, res.n_c),
    ))
}

fn fitted_model(n: usize, traces: &[GammaTrace]) -> Result<ErrorModel, String> {
    let config = FitConfig {
        order: ORDER,
        n_qubits: n,
        time: 10.0,
        steps: STEPS,
        upsilon: 1,
        window_start: burn_in(STEPS),
        placement: "per_step".into(),
    };
    let mut model = fit_model_coefficients(traces, &config).map_err(err)?;
    let h = tfi(n);
    let schedule = build_schedule(ORDER, 2).map_err(err)?;
    model.worst_case_b = Some(worst_case_algorithmic_prefactor(&h, &schedule, 10.0 / STEPS as f64).map_err(err)?);
    Ok(model)
}

fn criterion_9(shared: &Shared) -> Outcome {
    let start = Instant::now();
    let options = MetricOptions {
        physical: true,
        total: false,
        entropy: false,
    };
    let mut models = Vec::new();
    for n in [4, 6, 8] {
        models.push(fitted_model(n, &depolarizing_traces(n, 10.0, options)?)?);
    }
    models.push(fitted_model(10, shared.n10()?)?);
    let model = extrapolate_in_n(&models, 10, true).map_err(err)?;
    let b_worst = model.worst_case_b.ok_or("missing worst-case prefactor")?;
    let worst = WorstCaseModel {
        n_qubits: 10,
        b_worst,
        order: ORDER,
    };
    let ft = FtParams::default();
    let plan = plan_comparison(&model, &worst, 0.1, 10.0, &ft).map_err(err)?;
    let ok = plan.model.gamma_star > plan.worst.gamma_star
        && plan.model.r_opt < plan.worst.r_opt
        && plan.saving > 0.0
        && (0.25..=0.75).contains(&plan.saving);
    // the comparator with the bare operator-norm prefactor, for reference
    let bare = WorstCaseModel {
        b_worst: b_worst / 2.0,
        ..worst
    };
    let bare_plan = plan_comparison(&model, &bare, 0.1, 10.0, &ft).map_err(err)?;
    Ok((
        ok,
        format!(
            "C={:.3} B={:.3} B̃={:.3}; (r_opt, γ*)=({}, {:.3e}) vs ({}, {:.3e}); d_c {} vs {}; saving {:.1}% (unrounded {:.1}%); with B̃/2: {:.1}%; {:.0} s",
            model.c_prefactor,
            model.b_prefactor,
            b_worst,
            plan.model.r_opt,
            plan.model.gamma_star,
            plan.worst.r_opt,
            plan.worst.gamma_star,
            plan.model.resources.d_c,
            plan.worst.resources.d_c,
            100.0 * plan.saving,
            100.0 * plan.saving_unrounded,
            100.0 * bare_plan.saving,
            start.elapsed().as_secs_f64()
        ),
    ))
}

fn criterion_10() -> Outcome {
    let (n, gamma, time) = (8, 0.005, 10.0);
    let h = tfi(n);
    let schedule = build_schedule(ORDER, 2).map_err(err)?;
    let options = MetricOptions {
        physical: true,
        total: false,
        entropy: false,
    };
    let run = |spec: NoiseSpec| -> Result<ErrorTrace, String> {
        ErrorTracker::new(&h, &schedule, STEPS, time, spec)
            .map_err(err)?
            .run(&DensityMatrix::zero_state(n), options)
            .map_err(err)
    };
    let depol = window_fits(&run(NoiseSpec::depolarizing(gamma))?)?;
    let dephase = window_fits(&run(NoiseSpec::dephasing(gamma))?)?;
    let damp = run(NoiseSpec::amplitude_damping(gamma))?;
    let changes = |xs: &[f64]| {
        let diffs: Vec<f64> = xs[burn_in(STEPS)..].windows(2).map(|w| w[1] - w[0]).collect();
        diffs.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
    };
    let (cp, ca) = (changes(&damp.phys_series()), changes(&damp.alg_series()));
    let ok = depol.0.rate > dephase.0.rate && depol.1.rate > dephase.1.rate && cp >= 1 && ca >= 1;
    Ok((
        ok,
        format!(
            "decay rates depolarizing (phys {:.5}, alg {:.5}) vs dephasing (phys {:.5}, alg {:.5}); amplitude-damping sign changes: phys {cp}, alg {ca}",
            depol.0.rate, depol.1.rate, dephase.0.rate, dephase.1.rate
        ),
    ))
}

fn criterion_11() -> Outcome {
    let run = || -> Result<(String, String), String> {
        let h = tfi(4);
        let schedule = build_schedule(ORDER, 2).map_err(err)?;
        let tracker = ErrorTracker::new(&h, &schedule, 20, 4.0, NoiseSpec::depolarizing(0.01)).map_err(err)?;
        let trace = tracker
            .run(&haar_random_state(4, 1234).map_err(err)?, MetricOptions::default())
            .map_err(err)?;
        let model = ErrorModel::new(3.0, 0.5, 4.0, 0.5, 2, 1, 4);
        let gammas: Vec<f64> = (0..10).map(|k| 1e-4 * (k + 1) as f64).collect();
        let rs: Vec<usize> = (1..=10).map(|k| 10 * k).collect();
        let cells = phase_diagram(&model, &gammas, &rs, 4.0, 4, 8.0).map_err(err)?;
        Ok((trace.to_csv(), phase_csv(&cells)))
    };
    let a = run()?;
    let b = run()?;
    let ok = a == b && !a.0.contains("NaN");
    Ok((ok, format!("trace CSV {} bytes, phase CSV {} bytes, identical: {}", a.0.len(), a.1.len(), a == b)))
}

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let shared = Shared { traces: OnceCell::new() };
    let criteria: Vec<(usize, &str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, "exponential decay of one-step errors", Box::new(|| criterion_1(&shared))),
        (2, "algorithmic prefactor independent of noise rate", Box::new(|| criterion_2(&shared))),
        (3, "worst-case bound dominance", Box::new(|| criterion_3(&shared))),
        (4, "entropy contraction and ratio range", Box::new(|| criterion_4(&shared))),
        (5, "product-formula order scaling", Box::new(criterion_5)),
        (6, "commutator-form identity", Box::new(criterion_6)),
        (7, "planner exactness", Box::new(criterion_7)),
        (8, "fault-tolerance resources", Box::new(criterion_8)),
        (9, "end-to-end resource saving", Box::new(|| criterion_9(&shared))),
        (10, "noise-channel contrast", Box::new(criterion_10)),
        (11, "determinism", Box::new(criterion_11)),
    ];
    let mut failed = 0;
    for (id, name, f) in &criteria {
        if !selected.is_empty() && !selected.contains(id) {
            continue;
        }
        let (ok, detail) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!("criterion {id:>2} {}: {name} — {detail}", if ok { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} criterion/criteria FAILED");
        ExitCode::FAILURE
    } else {
        println!("all criteria PASS");
        ExitCode::SUCCESS
    }
}
