//! Per-step and accumulated error measures of a noisy product-formula circuit,
//! worst-case bounds, entropy diagnostics and observable-picture errors.
//!
//! Indexing: the record for step `d` (1-based) describes the `d`-th noisy step,
//! whose errors are evaluated on the state entering it, `rho_{d-1}`; the entropy
//! columns describe the state leaving it, `rho_d`. With this indexing the sum of
//! total one-step errors bounds the accumulated error for every `r >= 1`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{format_f64, parse_f64};
use crate::hamiltonian::GroupedHamiltonian;
use crate::linalg::{
    spectral_norm, spectral_norm_anti_hermitian, spectral_norm_hermitian, trace_norm,
    trace_norm_hermitian, ComplexMatrix, HermitianEigen,
};
use crate::noise::{LocalChannel, NoiseSpec, NoisyCircuit};
use crate::state::{partial_trace, relative_entropy_to_mixed, von_neumann_entropy, DensityMatrix};
use crate::trotter::{build_schedule, step_unitary, ExactPropagator, Schedule};

/// Steps excluded from decay fits: `max(5, ceil(r / 10))`.
pub fn burn_in(steps: usize) -> usize {
    5.max(steps.div_ceil(10))
}

/// `||rho - E(rho)||_1` for one noise layer of `spec`'s kind on every qubit.
pub fn one_step_physical_error(rho: &DensityMatrix, spec: &NoiseSpec) -> Result<f64> {
    let ch = LocalChannel::from_kind(&spec.kind)?;
    let mut e = rho.matrix().clone();
    ch.apply_all(&mut e, rho.n_qubits());
    trace_norm_hermitian(&(rho.matrix() - &e))
}

/// `||U rho U^dagger - PF rho PF^dagger||_1`
pub fn one_step_algorithmic_error(
    rho: &DensityMatrix,
    u: &ComplexMatrix,
    pf: &ComplexMatrix,
) -> Result<f64> {
    if u.dim() != rho.dim() || pf.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: if u.dim() != rho.dim() { u.dim() } else { pf.dim() },
        });
    }
    let a = rho.matrix().conjugate_by(u);
    let b = rho.matrix().conjugate_by(pf);
    trace_norm_hermitian(&(&a - &b))
}

/// `||[rho, M]||_1`, the commutator form of the algorithmic error.
pub fn commutator_form_error(rho: &DensityMatrix, m: &ComplexMatrix) -> Result<f64> {
    trace_norm(&rho.matrix().commutator(m))
}

/// `2 [1 - (1 - gamma)^n]`, the diamond-norm bound on one layer of
/// depolarizing noise.
pub fn physical_error_bound(n_qubits: usize, gamma: f64) -> f64 {
    2.0 * (1.0 - (1.0 - gamma).powi(n_qubits as i32))
}

/// Averaged local-to-global entropy-distance ratio
/// `[(1/n) sum_j D(rho || rho_{~j} ⊗ I/2)] / D(rho || I/2^n)`,
/// or `None` when the denominator vanishes (maximally mixed input).
pub fn entropy_ratio(rho: &DensityMatrix) -> Result<Option<f64>> {
    let s = von_neumann_entropy(rho)?;
    Ok(entropy_ratio_given(rho, s)?)
}

fn entropy_ratio_given(rho: &DensityMatrix, s: f64) -> Result<Option<f64>> {
    let n = rho.n_qubits();
    let global = n as f64 - s;
    if global <= 1e-12 {
        return Ok(None);
    }
    let mut local = 0.0;
    for q in 0..n {
        let rest = partial_trace(rho, &[q])?;
        // D(rho || rho_rest ⊗ I/2) = 1 + S(rho_rest) - S(rho)
        let s_rest = if n == 1 { 0.0 } else { von_neumann_entropy(&rest)? };
        local += (1.0 + s_rest - s).max(0.0);
    }
    Ok(Some(local / n as f64 / global))
}

/// Which optional metrics to compute along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricOptions {
    pub physical: bool,
    pub total: bool,
    pub entropy: bool,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            physical: true,
            total: true,
            entropy: true,
        }
    }
}

/// Errors of one noisy step. Skipped metrics are `NaN`; `entropy_ratio` is
/// also `NaN` for a maximally mixed state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub phys: f64,
    pub alg: f64,
    pub tot: f64,
    pub entropy_ratio: f64,
    pub rel_entropy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorTrace {
    pub records: Vec<StepRecord>,
    /// `||U(t) rho_0 U(t)^dagger - C(rho_0)||_1`
    pub acc_direct: f64,
    /// Sum of per-step total errors.
    pub acc_sum: f64,
    /// `D(rho_0 || I/2^n)`, the reference for entropy contraction.
    pub rel_entropy_initial: f64,
}

pub const TRACE_CSV_HEADER: &str = "step,phys_err,alg_err,tot_err,entropy_ratio,rel_entropy";

impl ErrorTrace {
    pub fn phys_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.phys).collect()
    }

    pub fn alg_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.alg).collect()
    }

    pub fn tot_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.tot).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(TRACE_CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.step,
                format_f64(r.phys),
                format_f64(r.alg),
                format_f64(r.tot),
                format_f64(r.entropy_ratio),
                format_f64(r.rel_entropy)
            );
        }
        s.push_str("acc_direct,acc_sum\n");
        let _ = writeln!(s, "{},{}", format_f64(self.acc_direct), format_f64(self.acc_sum));
        s
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    /// Parses the layout written by [`ErrorTrace::to_csv`]. The initial
    /// relative entropy is not part of the file and is set to `NaN`.
    pub fn read_csv(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != TRACE_CSV_HEADER {
            return Err(Error::Parse(format!("unexpected trace header {header:?}")));
        }
        let num = |s: &str| parse_f64(s).ok_or_else(|| Error::Parse(format!("bad number {s:?}")));
        let mut records = Vec::new();
        let mut summary = None;
        while let Some(line) = lines.next().transpose()? {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line == "acc_direct,acc_sum" {
                let vals = lines
                    .next()
                    .transpose()?
                    .ok_or_else(|| Error::Parse("missing summary values".into()))?;
                let f: Vec<&str> = vals.trim().split(',').collect();
                if f.len() != 2 {
                    return Err(Error::Parse(format!("bad summary row {vals:?}")));
                }
                summary = Some((num(f[0])?, num(f[1])?));
                break;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::Parse(format!("bad trace row {line:?}")));
            }
            records.push(StepRecord {
                step: f[0]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad step {:?}", f[0])))?,
                phys: num(f[1])?,
                alg: num(f[2])?,
                tot: num(f[3])?,
                entropy_ratio: num(f[4])?,
                rel_entropy: num(f[5])?,
            });
        }
        let (acc_direct, acc_sum) =
            summary.ok_or_else(|| Error::Parse("missing acc_direct,acc_sum summary".into()))?;
        Ok(Self {
            records,
            acc_direct,
            acc_sum,
            rel_entropy_initial: f64::NAN,
        })
    }
}

/// Runs a noisy circuit while measuring every per-step error.
#[derive(Clone, Debug)]
pub struct ErrorTracker {
    circuit: NoisyCircuit,
    propagator: ExactPropagator,
    u_step: ComplexMatrix,
}

impl ErrorTracker {
    pub fn new(
        h: &GroupedHamiltonian,
        schedule: &Schedule,
        steps: usize,
        time: f64,
        spec: NoiseSpec,
    ) -> Result<Self> {
        let circuit = NoisyCircuit::new(h, schedule, steps, time, spec)?;
        let propagator = ExactPropagator::new(h)?;
        let u_step = propagator.unitary(circuit.dt());
        Ok(Self {
            circuit,
            propagator,
            u_step,
        })
    }

    pub fn circuit(&self) -> &NoisyCircuit {
        &self.circuit
    }

    /// Exact one-step unitary `exp(-i H dt)`.
    pub fn exact_step(&self) -> &ComplexMatrix {
        &self.u_step
    }

    pub fn run(&self, rho0: &DensityMatrix, options: MetricOptions) -> Result<ErrorTrace> {
        self.run_with(rho0, options, |_, _| Ok(()))
    }

    /// Like [`ErrorTracker::run`], also calling `visit(d, rho_d)` after each step.
    pub fn run_with(
        &self,
        rho0: &DensityMatrix,
        options: MetricOptions,
        mut visit: impl FnMut(&StepRecord, &DensityMatrix) -> Result<()>,
    ) -> Result<ErrorTrace> {
        let n = self.circuit.n_qubits();
        if rho0.n_qubits() != n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                found: rho0.dim(),
            });
        }
        let mut rho = rho0.clone();
        let mut records = Vec::with_capacity(self.circuit.steps);
        for d in 1..=self.circuit.steps {
            let ideal = rho.matrix().conjugate_by(&self.u_step);
            let mut next = rho.matrix().clone();
            self.circuit.apply_unitary_part(&mut next);
            let alg = trace_norm_hermitian(&(&ideal - &next))?;
            let phys = if options.physical {
                let mut e = rho.matrix().clone();
                self.circuit.apply_noise(&mut e);
                trace_norm_hermitian(&(rho.matrix() - &e))?
            } else {
                f64::NAN
            };
            self.circuit.apply_noise(&mut next);
            let tot = if options.total {
                trace_norm_hermitian(&(&ideal - &next))?
            } else {
                f64::NAN
            };
            rho = DensityMatrix::from_matrix_unchecked(next)?;
            let (ratio, rel) = if options.entropy {
                let s = von_neumann_entropy(&rho)?;
                let ratio = entropy_ratio_given(&rho, s)?.unwrap_or(f64::NAN);
                (ratio, (n as f64 - s).max(0.0))
            } else {
                (f64::NAN, f64::NAN)
            };
            let record = StepRecord {
                step: d,
                phys,
                alg,
                tot,
                entropy_ratio: ratio,
                rel_entropy: rel,
            };
            visit(&record, &rho)?;
            records.push(record);
        }
        let target = rho0.matrix().conjugate_by(&self.propagator.unitary(self.circuit.time));
        let acc_direct = trace_norm_hermitian(&(&target - rho.matrix()))?;
        let acc_sum = records.iter().map(|r| r.tot).sum();
        let rel_entropy_initial = if options.entropy {
            relative_entropy_to_mixed(rho0)?
        } else {
            f64::NAN
        };
        Ok(ErrorTrace {
            records,
            acc_direct,
            acc_sum,
            rel_entropy_initial,
        })
    }
}

/// Accumulated error of the noisy circuit from `rho0`, with the full trace.
pub fn accumulated_error(
    h: &GroupedHamiltonian,
    schedule: &Schedule,
    steps: usize,
    time: f64,
    spec: NoiseSpec,
    rho0: &DensityMatrix,
) -> Result<ErrorTrace> {
    ErrorTracker::new(h, schedule, steps, time, spec)?.run(rho0, MetricOptions::default())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseBounds {
    /// `2 [1 - (1 - gamma)^n]`
    pub phys_bound: f64,
    /// `||PF_p(dt) - U(dt)||_inf`
    pub alg_empirical: f64,
    /// `alpha_p dt^{p+1} / (p+1)!`; only available for `p` in `{1, 2}`.
    pub alg_commutator: Option<f64>,
}

/// `alpha_p = sum over (l_1..l_{p+1}) of ||[H_l1, [H_l2, ..., [H_lp, H_l(p+1)]]]||_inf`
/// for `p` in `{1, 2}`.
pub fn nested_commutator_norm(h: &GroupedHamiltonian, p: usize) -> Result<f64> {
    if !(p == 1 || p == 2) {
        return Err(Error::InvalidParameter(format!(
            "nested-commutator norm implemented for p = 1, 2 only, got {p}"
        )));
    }
    if h.n_qubits() > 10 {
        return Err(Error::SizeLimit {
            what: "nested-commutator bound",
            n_qubits: h.n_qubits(),
            max: 10,
        });
    }
    let mats: Vec<ComplexMatrix> = (0..h.n_groups())
        .map(|g| h.group_matrix(g))
        .collect::<Result<_>>()?;
    let l = mats.len();
    let mut total = 0.0;
    for a in 0..l {
        for b in 0..l {
            if a == b {
                continue;
            }
            let inner = mats[a].commutator(&mats[b]);
            if p == 1 {
                total += spectral_norm_anti_hermitian(&inner)?;
            } else {
                for m in &mats {
                    total += spectral_norm_hermitian(&m.commutator(&inner))?;
                }
            }
        }
    }
    Ok(total)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

pub fn commutator_bound(h: &GroupedHamiltonian, p: usize, dt: f64) -> Result<f64> {
    Ok(nested_commutator_norm(h, p)? * dt.powi(p as i32 + 1) / factorial(p + 1))
}

/// `||PF(dt) - U(dt)||_inf` from dense unitaries.
pub fn empirical_trotter_bound(h: &GroupedHamiltonian, schedule: &Schedule, dt: f64) -> Result<f64> {
    let u = ExactPropagator::new(h)?.unitary(dt);
    let pf = step_unitary(h, schedule, dt)?;
    spectral_norm(&(&pf - &u))
}

/// Prefactor `B̃` of the state-independent per-step bound in trace-norm units,
/// `||U rho U^dagger - PF rho PF^dagger||_1 <= 2 ||PF - U||_inf = B̃ dt^{p+1}`.
pub fn worst_case_algorithmic_prefactor(h: &GroupedHamiltonian, schedule: &Schedule, dt: f64) -> Result<f64> {
    Ok(2.0 * empirical_trotter_bound(h, schedule, dt)? / dt.powi(schedule.order as i32 + 1))
}

pub fn worst_case_trotter_bound(
    h: &GroupedHamiltonian,
    p: usize,
    dt: f64,
    gamma: f64,
) -> Result<WorstCaseBounds> {
    let schedule = build_schedule(p, h.n_groups())?;
    let alg_commutator = if (p == 1 || p == 2) && h.n_qubits() <= 10 {
        Some(commutator_bound(h, p, dt)?)
    } else {
        None
    };
    Ok(WorstCaseBounds {
        phys_bound: physical_error_bound(h.n_qubits(), gamma),
        alg_empirical: empirical_trotter_bound(h, &schedule, dt)?,
        alg_commutator,
    })
}

/// Pure state maximizing `||(U - PF) psi||_2`: the top right singular vector of
/// `U - PF`.
pub fn worst_one_step_state(u: &ComplexMatrix, pf: &ComplexMatrix) -> Result<DensityMatrix> {
    let d = u - pf;
    let gram = d.adjoint().matmul(&d);
    let eig = HermitianEigen::new(&gram)?;
    let top = eig.values.len() - 1;
    DensityMatrix::from_pure(&eig.vector(top))
}

/// Heisenberg-picture errors of one step acting on an observable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub step: usize,
    /// `||U^dagger O U - PF^dagger O PF||_inf`
    pub alg_ob: f64,
    /// `||E^dagger(O) - O||_inf`
    pub phys_ob: f64,
    /// `|Tr(rho_ref (U^dagger O U - PF^dagger O PF))|`
    pub alg_val: f64,
    /// `|Tr(rho_ref (E^dagger(O) - O))|`
    pub phys_val: f64,
}

/// Evolves `o` backwards through the noisy circuit, `O_d = PF^dagger E^dagger(O_{d-1}) PF`,
/// recording the step errors on the operator entering each step.
pub fn observable_errors(
    h: &GroupedHamiltonian,
    schedule: &Schedule,
    steps: usize,
    time: f64,
    spec: NoiseSpec,
    o: &ComplexMatrix,
    rho_ref: &DensityMatrix,
) -> Result<Vec<ObservableRecord>> {
    if h.n_qubits() > 10 {
        return Err(Error::SizeLimit {
            what: "Heisenberg-picture evolution",
            n_qubits: h.n_qubits(),
            max: 10,
        });
    }
    let n = h.n_qubits();
    if o.dim() != h.dim() || rho_ref.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: if o.dim() != h.dim() { o.dim() } else { rho_ref.dim() },
        });
    }
    o.ensure_hermitian()?;
    let circuit = NoisyCircuit::new(h, schedule, steps, time, spec)?;
    let u = ExactPropagator::new(h)?.unitary(circuit.dt());
    let u_dag = u.adjoint();
    let mut od = o.clone();
    let mut out = Vec::with_capacity(steps);
    for d in 1..=steps {
        let ideal = od.conjugate_by(&u_dag);
        let mut trotter = od.clone();
        circuit.kernel().apply_heisenberg(&mut trotter);
        let alg_delta = &ideal - &trotter;
        let mut noisy = od.clone();
        circuit.step_noise().apply_adjoint(&mut noisy, n);
        let phys_delta = &noisy - &od;
        out.push(ObservableRecord {
            step: d,
            alg_ob: spectral_norm_hermitian(&alg_delta)?,
            phys_ob: spectral_norm_hermitian(&phys_delta)?,
            alg_val: rho_ref.expectation(&alg_delta).abs(),
            phys_val: rho_ref.expectation(&phys_delta).abs(),
        });
        // O_d = PF^dagger E^dagger(O_{d-1}) PF
        circuit.kernel().apply_heisenberg(&mut noisy);
        od = noisy;
    }
    Ok(out)
}
