//! Local noise channels and the noisy product-formula circuit.
//!
//! Every supported single-qubit channel (and its adjoint) has a real 4x4
//! superoperator in the basis `(rho_00, rho_01, rho_10, rho_11)`, applied to
//! one qubit at a time so memory stays at one `4^n` density matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::GroupedHamiltonian;
use crate::linalg::ComplexMatrix;
use crate::state::{DensityMatrix, MAX_DENSE_QUBITS};
use crate::trotter::{Schedule, StepKernel};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ChannelKind {
    /// `(1 - gx - gy - gz) rho + gx X rho X + gy Y rho Y + gz Z rho Z`
    Pauli { gx: f64, gy: f64, gz: f64 },
    /// Kraus operators `A0 = diag(1, sqrt(1-g))`, `A1 = sqrt(g) |0><1|`.
    AmplitudeDamping { g: f64 },
}

/// Where noise layers sit in the circuit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Placement {
    /// One noise layer after every step.
    #[default]
    PerStep,
    /// One noise layer per circuit layer (`Schedule::layers` per step).
    PerLayer,
    /// One layer per step whose total rate is `rate * dt`.
    PerTime { rate: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: ChannelKind,
    #[serde(default)]
    pub placement: Placement,
}

impl NoiseSpec {
    pub fn pauli(gx: f64, gy: f64, gz: f64) -> Self {
        Self {
            kind: ChannelKind::Pauli { gx, gy, gz },
            placement: Placement::PerStep,
        }
    }

    pub fn depolarizing(gamma: f64) -> Self {
        Self::pauli(gamma / 3.0, gamma / 3.0, gamma / 3.0)
    }

    pub fn dephasing(gamma: f64) -> Self {
        Self::pauli(0.0, 0.0, gamma)
    }

    pub fn amplitude_damping(g: f64) -> Self {
        Self {
            kind: ChannelKind::AmplitudeDamping { g },
            placement: Placement::PerStep,
        }
    }

    pub fn noiseless() -> Self {
        Self::pauli(0.0, 0.0, 0.0)
    }

    pub fn with_placement(mut self, placement: Placement) -> Self {
        self.placement = placement;
        self
    }

    /// Total error probability of one layer: `gx + gy + gz`, or `g`.
    pub fn base_rate(&self) -> f64 {
        match self.kind {
            ChannelKind::Pauli { gx, gy, gz } => gx + gy + gz,
            ChannelKind::AmplitudeDamping { g } => g,
        }
    }

    pub fn is_pauli(&self) -> bool {
        matches!(self.kind, ChannelKind::Pauli { .. })
    }

    pub fn validate(&self) -> Result<()> {
        validate_kind(&self.kind)?;
        if let Placement::PerTime { rate } = self.placement {
            if !(rate >= 0.0) || !rate.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "per-time noise rate must be finite and >= 0, got {rate}"
                )));
            }
        }
        Ok(())
    }

    /// The local channel and number of layers applied after one step of
    /// duration `dt` with `layers` circuit layers.
    pub fn step_noise(&self, layers: usize, dt: f64) -> Result<StepNoise> {
        self.validate()?;
        let (kind, repetitions) = match self.placement {
            Placement::PerStep => (self.kind, 1),
            Placement::PerLayer => (self.kind, layers),
            Placement::PerTime { rate } => (scale_kind(&self.kind, rate * dt)?, 1),
        };
        Ok(StepNoise {
            channel: LocalChannel::from_kind(&kind)?,
            repetitions,
        })
    }
}

fn validate_kind(kind: &ChannelKind) -> Result<()> {
    match *kind {
        ChannelKind::Pauli { gx, gy, gz } => {
            let ok = [gx, gy, gz].iter().all(|g| g.is_finite() && *g >= 0.0);
            if !ok || gx + gy + gz > 1.0 + 1e-15 {
                return Err(Error::InvalidParameter(format!(
                    "Pauli rates ({gx}, {gy}, {gz}) must be nonnegative with sum <= 1"
                )));
            }
        }
        ChannelKind::AmplitudeDamping { g } => {
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::InvalidParameter(format!(
                    "amplitude-damping rate {g} outside [0, 1]"
                )));
            }
        }
    }
    Ok(())
}

/// Rescales the channel so its total rate becomes `total`, keeping the
/// relative weights of a Pauli channel.
fn scale_kind(kind: &ChannelKind, total: f64) -> Result<ChannelKind> {
    let out = match *kind {
        ChannelKind::Pauli { gx, gy, gz } => {
            let s = gx + gy + gz;
            if s == 0.0 {
                // no direction to scale along; treat as depolarizing
                ChannelKind::Pauli {
                    gx: total / 3.0,
                    gy: total / 3.0,
                    gz: total / 3.0,
                }
            } else {
                ChannelKind::Pauli {
                    gx: gx / s * total,
                    gy: gy / s * total,
                    gz: gz / s * total,
                }
            }
        }
        ChannelKind::AmplitudeDamping { .. } => ChannelKind::AmplitudeDamping { g: total },
    };
    validate_kind(&out)?;
    Ok(out)
}

/// Real single-qubit superoperator on `(rho_00, rho_01, rho_10, rho_11)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalChannel {
    pub superop: [[f64; 4]; 4],
}

impl LocalChannel {
    pub fn from_kind(kind: &ChannelKind) -> Result<Self> {
        validate_kind(kind)?;
        let superop = match *kind {
            ChannelKind::Pauli { gx, gy, gz } => {
                let g = gx + gy + gz;
                let flip = gx + gy;
                let keep = 1.0 - g - gz;
                let cross = gx - gy;
                [
                    [1.0 - flip, 0.0, 0.0, flip],
                    [0.0, keep, cross, 0.0],
                    [0.0, cross, keep, 0.0],
                    [flip, 0.0, 0.0, 1.0 - flip],
                ]
            }
            ChannelKind::AmplitudeDamping { g } => {
                let s = (1.0 - g).sqrt();
                [
                    [1.0, 0.0, 0.0, g],
                    [0.0, s, 0.0, 0.0],
                    [0.0, 0.0, s, 0.0],
                    [0.0, 0.0, 0.0, 1.0 - g],
                ]
            }
        };
        Ok(Self { superop })
    }

    /// The Hilbert-Schmidt adjoint (transpose, since the superoperator is real).
    pub fn adjoint(&self) -> Self {
        let mut t = [[0.0; 4]; 4];
        for (i, row) in self.superop.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                t[j][i] = v;
            }
        }
        Self { superop: t }
    }

    pub fn is_identity(&self) -> bool {
        self.superop
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().enumerate().all(|(j, &v)| v == if i == j { 1.0 } else { 0.0 }))
    }

    /// Applies the channel to `qubit` of an `n_qubits` operator in place.
    pub fn apply_to_qubit(&self, m: &mut ComplexMatrix, n_qubits: usize, qubit: usize) {
        let dim = m.dim();
        let bit = 1usize << (n_qubits - 1 - qubit);
        let s = &self.superop;
        let data = m.as_mut_slice();
        for j0 in (0..dim).filter(|j| j & bit == 0) {
            let j1 = j0 | bit;
            for i0 in (0..dim).filter(|i| i & bit == 0) {
                let i1 = i0 | bit;
                let v = [
                    data[i0 + j0 * dim],
                    data[i0 + j1 * dim],
                    data[i1 + j0 * dim],
                    data[i1 + j1 * dim],
                ];
                let out = |r: usize| v[0] * s[r][0] + v[1] * s[r][1] + v[2] * s[r][2] + v[3] * s[r][3];
                data[i0 + j0 * dim] = out(0);
                data[i0 + j1 * dim] = out(1);
                data[i1 + j0 * dim] = out(2);
                data[i1 + j1 * dim] = out(3);
            }
        }
    }

    /// Applies the channel to every qubit in `qubits`.
    pub fn apply(&self, m: &mut ComplexMatrix, n_qubits: usize, qubits: &[usize]) {
        if self.is_identity() {
            return;
        }
        for &q in qubits {
            self.apply_to_qubit(m, n_qubits, q);
        }
    }

    pub fn apply_all(&self, m: &mut ComplexMatrix, n_qubits: usize) {
        let all: Vec<usize> = (0..n_qubits).collect();
        self.apply(m, n_qubits, &all);
    }
}

/// The noise applied after one step: `channel^{⊗n}` repeated `repetitions` times.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepNoise {
    pub channel: LocalChannel,
    pub repetitions: usize,
}

impl StepNoise {
    pub fn apply(&self, m: &mut ComplexMatrix, n_qubits: usize) {
        for _ in 0..self.repetitions {
            self.channel.apply_all(m, n_qubits);
        }
    }

    pub fn apply_adjoint(&self, o: &mut ComplexMatrix, n_qubits: usize) {
        let adj = self.channel.adjoint();
        for _ in 0..self.repetitions {
            adj.apply_all(o, n_qubits);
        }
    }
}

fn check_qubit_list(n_qubits: usize, qubits: &[usize]) -> Result<()> {
    let mut seen = vec![false; n_qubits];
    for &q in qubits {
        if q >= n_qubits {
            return Err(Error::QubitOutOfRange { index: q, n_qubits });
        }
        if std::mem::replace(&mut seen[q], true) {
            return Err(Error::DuplicateQubit(q));
        }
    }
    Ok(())
}

pub fn apply_pauli_channel(
    rho: &DensityMatrix,
    gx: f64,
    gy: f64,
    gz: f64,
    qubits: &[usize],
) -> Result<DensityMatrix> {
    check_qubit_list(rho.n_qubits(), qubits)?;
    let ch = LocalChannel::from_kind(&ChannelKind::Pauli { gx, gy, gz })?;
    let mut m = rho.matrix().clone();
    ch.apply(&mut m, rho.n_qubits(), qubits);
    DensityMatrix::from_matrix_unchecked(m)
}

pub fn apply_amplitude_damping(rho: &DensityMatrix, g: f64, qubits: &[usize]) -> Result<DensityMatrix> {
    check_qubit_list(rho.n_qubits(), qubits)?;
    let ch = LocalChannel::from_kind(&ChannelKind::AmplitudeDamping { g })?;
    let mut m = rho.matrix().clone();
    ch.apply(&mut m, rho.n_qubits(), qubits);
    DensityMatrix::from_matrix_unchecked(m)
}

/// Applies one noise layer of `spec`'s kind to every qubit of `rho`.
pub fn apply_noise_layer(rho: &DensityMatrix, spec: &NoiseSpec) -> Result<DensityMatrix> {
    let ch = LocalChannel::from_kind(&spec.kind)?;
    let mut m = rho.matrix().clone();
    ch.apply_all(&mut m, rho.n_qubits());
    DensityMatrix::from_matrix_unchecked(m)
}

/// Heisenberg-picture action of one noise layer on every qubit of `o`.
pub fn adjoint_channel(o: &ComplexMatrix, spec: &NoiseSpec) -> Result<ComplexMatrix> {
    let dim = o.dim();
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "operator dimension {dim} is not a power of two"
        )));
    }
    let n = dim.trailing_zeros() as usize;
    let ch = LocalChannel::from_kind(&spec.kind)?.adjoint();
    let mut out = o.clone();
    ch.apply_all(&mut out, n);
    Ok(out)
}

/// Diamond distance between the `n`-qubit product Pauli channels of two specs:
/// the L1 distance between their Pauli error distributions.
pub fn diamond_distance_pauli(a: &NoiseSpec, b: &NoiseSpec, n: usize) -> Result<f64> {
    let probs = |s: &NoiseSpec| -> Result<[f64; 4]> {
        match s.kind {
            ChannelKind::Pauli { gx, gy, gz } => {
                validate_kind(&s.kind)?;
                Ok([1.0 - gx - gy - gz, gx, gy, gz])
            }
            ChannelKind::AmplitudeDamping { .. } => Err(Error::UnsupportedChannel(
                "diamond distance is only available in closed form for Pauli channels".into(),
            )),
        }
    };
    let (p, q) = (probs(a)?, probs(b)?);
    let nn = n as i32;
    // closed forms when either side is the identity channel
    if q[1..].iter().all(|&x| x == 0.0) {
        return Ok(2.0 * (1.0 - p[0].powi(nn)));
    }
    if p[1..].iter().all(|&x| x == 0.0) {
        return Ok(2.0 * (1.0 - q[0].powi(nn)));
    }
    if n > MAX_DENSE_QUBITS {
        return Err(Error::SizeLimit {
            what: "Pauli distribution enumeration",
            n_qubits: n,
            max: MAX_DENSE_QUBITS,
        });
    }
    // Distributions are symmetric under permuting qubits; sum over multiplicity
    // classes (k0, k1, k2, k3) with multinomial weights.
    let mut total = 0.0;
    let lnf: Vec<f64> = (0..=n).scan(0.0, |acc, k| {
        if k > 0 {
            *acc += (k as f64).ln();
        }
        Some(*acc)
    }).collect();
    for k0 in 0..=n {
        for k1 in 0..=n - k0 {
            for k2 in 0..=n - k0 - k1 {
                let k3 = n - k0 - k1 - k2;
                let ks = [k0, k1, k2, k3];
                let mult = (lnf[n] - ks.iter().map(|&k| lnf[k]).sum::<f64>()).exp();
                let term = |d: &[f64; 4]| ks.iter().zip(d).map(|(&k, &x)| x.powi(k as i32)).product::<f64>();
                total += mult * (term(&p) - term(&q)).abs();
            }
        }
    }
    Ok(total)
}

/// What a trajectory keeps in memory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retention {
    All,
    Final,
}

impl Retention {
    /// Full retention up to 8 qubits, final state only above.
    pub fn default_for(n_qubits: usize) -> Self {
        if n_qubits > 8 {
            Retention::Final
        } else {
            Retention::All
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub hamiltonian: String,
    pub order: usize,
    pub steps: usize,
    pub time: f64,
    pub noise: NoiseSpec,
    pub initial: String,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    /// `rho_0 .. rho_r` under full retention, `[rho_0, rho_r]` otherwise.
    pub states: Vec<DensityMatrix>,
    pub retention: Retention,
    pub config: TrajectoryConfig,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory holds at least rho_0")
    }
}

/// `(E ∘ PF_p(dt))^r` for a fixed Hamiltonian, schedule and noise model.
#[derive(Clone, Debug)]
pub struct NoisyCircuit {
    n_qubits: usize,
    pub steps: usize,
    pub time: f64,
    pub spec: NoiseSpec,
    kernel: StepKernel,
    noise: StepNoise,
    config: TrajectoryConfig,
}

impl NoisyCircuit {
    pub fn new(
        h: &GroupedHamiltonian,
        schedule: &Schedule,
        steps: usize,
        time: f64,
        spec: NoiseSpec,
    ) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter("need at least one Trotter step".into()));
        }
        if !(time > 0.0) || !time.is_finite() {
            return Err(Error::InvalidParameter(format!("evolution time must be positive, got {time}")));
        }
        if h.n_qubits() > MAX_DENSE_QUBITS {
            return Err(Error::SizeLimit {
                what: "density-matrix simulation",
                n_qubits: h.n_qubits(),
                max: MAX_DENSE_QUBITS,
            });
        }
        let dt = time / steps as f64;
        let noise = spec.step_noise(schedule.layers, dt)?;
        let kernel = StepKernel::new(h, schedule, dt)?;
        Ok(Self {
            n_qubits: h.n_qubits(),
            steps,
            time,
            spec,
            kernel,
            noise,
            config: TrajectoryConfig {
                hamiltonian: h.label.clone(),
                order: schedule.order,
                steps,
                time,
                noise: spec,
                initial: String::new(),
                seed: 0,
            },
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dt(&self) -> f64 {
        self.time / self.steps as f64
    }

    pub fn kernel(&self) -> &StepKernel {
        &self.kernel
    }

    pub fn step_noise(&self) -> &StepNoise {
        &self.noise
    }

    /// Labels recorded in the trajectory's configuration echo.
    pub fn with_labels(mut self, initial: impl Into<String>, seed: u64) -> Self {
        self.config.initial = initial.into();
        self.config.seed = seed;
        self
    }

    pub fn config(&self) -> &TrajectoryConfig {
        &self.config
    }

    fn check_state(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.n_qubits,
                found: rho.dim(),
            });
        }
        Ok(())
    }

    /// `m <- PF m PF^dagger`
    pub fn apply_unitary_part(&self, m: &mut ComplexMatrix) {
        self.kernel.apply(m);
    }

    /// `m <- E(m)`
    pub fn apply_noise(&self, m: &mut ComplexMatrix) {
        self.noise.apply(m, self.n_qubits);
    }

    /// One noisy step in place.
    pub fn step(&self, m: &mut ComplexMatrix) {
        self.apply_unitary_part(m);
        self.apply_noise(m);
    }

    /// Runs all steps, calling `visit(d, rho_d)` for `d = 0..=r`.
    pub fn stream(
        &self,
        rho0: &DensityMatrix,
        mut visit: impl FnMut(usize, &DensityMatrix) -> Result<()>,
    ) -> Result<DensityMatrix> {
        self.check_state(rho0)?;
        let mut rho = rho0.clone();
        visit(0, &rho)?;
        for d in 1..=self.steps {
            self.step(rho.matrix_mut());
            visit(d, &rho)?;
        }
        Ok(rho)
    }

    pub fn run(&self, rho0: &DensityMatrix, retention: Retention) -> Result<Trajectory> {
        let mut states = Vec::new();
        let last = self.stream(rho0, |d, rho| {
            if retention == Retention::All || d == 0 {
                states.push(rho.clone());
            }
            Ok(())
        })?;
        if retention == Retention::Final {
            states.push(last);
        }
        Ok(Trajectory {
            states,
            retention,
            config: self.config.clone(),
        })
    }
}

/// Convenience wrapper building the circuit and running it with the default
/// retention for the register size.
pub fn run_noisy_circuit(
    h: &GroupedHamiltonian,
    schedule: &Schedule,
    steps: usize,
    time: f64,
    spec: NoiseSpec,
    rho0: &DensityMatrix,
) -> Result<Trajectory> {
    NoisyCircuit::new(h, schedule, steps, time, spec)?.run(rho0, Retention::default_for(h.n_qubits()))
}
