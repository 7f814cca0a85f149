//! Experiment configuration: a JSON file, overridden field by field by flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use noisy_trotter::{
    build_fermi_hubbard, build_powerlaw_heisenberg, build_tfi, GroupedHamiltonian, NoiseSpec, Placement,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

/// Flags shared by `simulate` and `sweep`.
#[derive(Args, Debug, Clone, Default)]
pub struct ExperimentArgs {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `tfi:J=2,h=1,periodic`, `powerlaw:alpha=4,h=0`, `hubbard:v=1,u=1`, or a Hamiltonian file.
    #[arg(long)]
    pub hamiltonian: Option<String>,
    /// Number of qubits; comma-separated for sweeps.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Product-formula order (1, 2, 4, ...).
    #[arg(long)]
    pub order: Option<usize>,
    /// Trotter number r.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Evolution time t (defaults to n).
    #[arg(long)]
    pub time: Option<f64>,
    /// `depolarizing`, `dephasing`, `amplitude_damping`, or `pauli:wx,wy,wz`.
    #[arg(long)]
    pub noise: Option<String>,
    /// Noise rate; comma-separated for sweeps.
    #[arg(long, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    /// `per_step`, `per_layer` or `per_time`.
    #[arg(long)]
    pub placement: Option<String>,
    /// `zero`, `plus`, `ground`, `haar(seed,count)` or `worst_one_step`.
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (simulate) or directory (sweep).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
}

/// The config file schema. Every field is optional; `n` and `gamma` accept a
/// number or a list.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub hamiltonian: Option<Value>,
    /// A Hamiltonian may also be given by its own fields at top level.
    pub n_qubits: Option<usize>,
    pub label: Option<String>,
    pub groups: Option<Value>,
    pub n: Option<OneOrMany<usize>>,
    pub order: Option<usize>,
    pub steps: Option<usize>,
    pub time: Option<f64>,
    pub noise: Option<String>,
    pub gamma: Option<OneOrMany<f64>>,
    pub placement: Option<String>,
    pub initial: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            Self::One(x) => vec![x],
            Self::Many(v) => v,
        }
    }
}

/// Where the Hamiltonian comes from, kept in its textual form for manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HamiltonianSource {
    Spec(String),
    Inline(Value),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialState {
    Zero,
    Plus,
    Ground,
    Haar { seed: u64, count: usize },
    WorstOneStep,
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub hamiltonian: HamiltonianSource,
    pub n: Vec<usize>,
    pub order: usize,
    pub steps: usize,
    /// `None` means `t = n` for each size.
    pub time: Option<f64>,
    pub noise: String,
    pub gamma: Vec<f64>,
    pub placement: String,
    pub initial: String,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl Experiment {
    pub fn resolve(args: &ExperimentArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
                serde_json::from_str::<ConfigFile>(&text)
                    .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?
            }
            None => ConfigFile::default(),
        };
        let top_level = file.groups.clone().map(|groups| {
            let mut m = serde_json::Map::new();
            if let Some(n) = file.n_qubits {
                m.insert("n_qubits".into(), n.into());
            }
            if let Some(l) = &file.label {
                m.insert("label".into(), l.clone().into());
            }
            m.insert("groups".into(), groups);
            Value::Object(m)
        });
        if top_level.is_some() && file.hamiltonian.is_some() {
            return Err(CliError::Config("config gives both `hamiltonian` and top-level `groups`".into()));
        }
        let hamiltonian = match (&args.hamiltonian, file.hamiltonian.or(top_level)) {
            (Some(s), _) => HamiltonianSource::Spec(s.clone()),
            (None, Some(Value::String(s))) => HamiltonianSource::Spec(s),
            (None, Some(v @ Value::Object(_))) => HamiltonianSource::Inline(v),
            (None, Some(_)) => return Err(CliError::Config("`hamiltonian` must be a string or an object".into())),
            (None, None) => HamiltonianSource::Spec("tfi:J=2,h=1,periodic".into()),
        };
        let n = args
            .n
            .clone()
            .or(file.n.map(OneOrMany::into_vec))
            .unwrap_or_default();
        let gamma = args
            .gamma
            .clone()
            .or(file.gamma.map(OneOrMany::into_vec))
            .unwrap_or_else(|| vec![0.005]);
        let exp = Self {
            hamiltonian,
            n,
            order: args.order.or(file.order).unwrap_or(2),
            steps: args.steps.or(file.steps).unwrap_or(100),
            time: args.time.or(file.time),
            noise: args.noise.clone().or(file.noise).unwrap_or_else(|| "depolarizing".into()),
            gamma,
            placement: args.placement.clone().or(file.placement).unwrap_or_else(|| "per_step".into()),
            initial: args.initial.clone().or(file.initial).unwrap_or_else(|| "zero".into()),
            seed: args.seed.or(file.seed).unwrap_or(0),
            out: args.out.clone().or(file.out),
            workers: args.workers.or(file.workers),
        };
        exp.validate()?;
        Ok(exp)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.gamma.is_empty() {
            return Err(CliError::Config("noise-rate grid is empty".into()));
        }
        if self.gamma.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(CliError::Config(format!("noise rates must be finite and >= 0, got {:?}", self.gamma)));
        }
        if self.steps == 0 {
            return Err(CliError::Config("--steps must be >= 1".into()));
        }
        if let Some(t) = self.time {
            if !(t > 0.0) || !t.is_finite() {
                return Err(CliError::Config(format!("--time must be positive, got {t}")));
            }
        }
        if self.order == 0 || (self.order > 2 && self.order % 2 == 1) {
            return Err(CliError::Config(format!("order must be 1 or even, got {}", self.order)));
        }
        if let HamiltonianSource::Spec(s) = &self.hamiltonian {
            if !is_builtin(s) && !Path::new(s).exists() {
                return Err(CliError::Config(format!("Hamiltonian file {s:?} does not exist")));
            }
        }
        parse_noise(&self.noise, 0.0, &self.placement)?;
        parse_initial(&self.initial)?;
        Ok(())
    }

    /// Evolution time for a system of `n` qubits.
    pub fn time_for(&self, n: usize) -> f64 {
        self.time.unwrap_or(n as f64)
    }

    /// System sizes, taking the size of a file-defined Hamiltonian when none is given.
    pub fn sizes(&self) -> Result<Vec<usize>, CliError> {
        if !self.n.is_empty() {
            return Ok(self.n.clone());
        }
        match &self.hamiltonian {
            HamiltonianSource::Spec(s) if is_builtin(s) => Ok(vec![10]),
            _ => Ok(vec![self.build_hamiltonian(None)?.n_qubits()]),
        }
    }

    pub fn build_hamiltonian(&self, n: Option<usize>) -> Result<GroupedHamiltonian, CliError> {
        let h = match &self.hamiltonian {
            HamiltonianSource::Spec(s) if is_builtin(s) => {
                let n = n.ok_or_else(|| CliError::Config("builtin Hamiltonians need --n".into()))?;
                build_builtin(s, n)?
            }
            HamiltonianSource::Spec(path) => noisy_trotter::load_hamiltonian(path)?,
            HamiltonianSource::Inline(v) => GroupedHamiltonian::from_json(v)?,
        };
        if let Some(n) = n {
            if h.n_qubits() != n {
                return Err(CliError::Config(format!(
                    "Hamiltonian has {} qubits but n = {n} was requested",
                    h.n_qubits()
                )));
            }
        }
        Ok(h)
    }
}

fn is_builtin(spec: &str) -> bool {
    let name = spec.split(':').next().unwrap_or("");
    matches!(name, "tfi" | "powerlaw" | "hubbard")
}

/// `key=value` pairs and bare flags after the `name:` prefix.
fn builtin_params(spec: &str) -> (String, Vec<(String, Option<String>)>) {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let params = rest
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| match kv.split_once('=') {
            Some((k, v)) => (k.trim().to_string(), Some(v.trim().to_string())),
            None => (kv.trim().to_string(), None),
        })
        .collect();
    (name.to_string(), params)
}

fn build_builtin(spec: &str, n: usize) -> Result<GroupedHamiltonian, CliError> {
    let (name, params) = builtin_params(spec);
    let mut values = std::collections::BTreeMap::new();
    let mut flags = Vec::new();
    for (k, v) in params {
        match v {
            Some(v) => {
                let x: f64 = v
                    .parse()
                    .map_err(|_| CliError::Config(format!("{name}: parameter {k}={v:?} is not a number")))?;
                values.insert(k, x);
            }
            None => flags.push(k),
        }
    }
    let take = |values: &mut std::collections::BTreeMap<String, f64>, k: &str, default: f64| {
        values.remove(k).unwrap_or(default)
    };
    let h = match name.as_str() {
        "tfi" => {
            let j = take(&mut values, "J", 2.0);
            let h = take(&mut values, "h", 1.0);
            let periodic = match flags.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
                [] | ["periodic"] => true,
                ["open"] => false,
                other => return Err(CliError::Config(format!("tfi: unknown flags {other:?}"))),
            };
            flags.clear();
            build_tfi(n, j, h, periodic)?
        }
        "powerlaw" => {
            let alpha = take(&mut values, "alpha", 4.0);
            let field = take(&mut values, "h", 0.0);
            build_powerlaw_heisenberg(n, alpha, &vec![field; n])?
        }
        "hubbard" => {
            if n % 2 != 0 {
                return Err(CliError::Config(format!("hubbard needs an even qubit count, got {n}")));
            }
            let v = take(&mut values, "v", 1.0);
            let u = take(&mut values, "u", 1.0);
            build_fermi_hubbard(n / 2, v, u)?
        }
        _ => unreachable!("checked by is_builtin"),
    };
    if let Some(k) = values.keys().next() {
        return Err(CliError::Config(format!("{name}: unknown parameter {k:?}")));
    }
    if let Some(f) = flags.first() {
        return Err(CliError::Config(format!("{name}: unknown flag {f:?}")));
    }
    Ok(h)
}

pub fn parse_placement(s: &str, gamma: f64) -> Result<Placement, CliError> {
    match s {
        "per_step" => Ok(Placement::PerStep),
        "per_layer" => Ok(Placement::PerLayer),
        "per_time" => Ok(Placement::PerTime { rate: gamma }),
        other => Err(CliError::Config(format!("unknown placement {other:?}"))),
    }
}

/// Noise spec at rate `gamma`. Under `per_time` the rate is per unit time and
/// the channel shape is rescaled by `gamma * dt`.
pub fn parse_noise(s: &str, gamma: f64, placement: &str) -> Result<NoiseSpec, CliError> {
    let placement = parse_placement(placement, gamma)?;
    let spec = match s {
        "depolarizing" => NoiseSpec::depolarizing(gamma),
        "dephasing" => NoiseSpec::dephasing(gamma),
        "amplitude_damping" => NoiseSpec::amplitude_damping(gamma),
        _ => match s.strip_prefix("pauli:") {
            Some(ws) => {
                let w: Vec<f64> = ws
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| CliError::Config(format!("bad Pauli weights in {s:?}")))?;
                let total: f64 = w.iter().sum();
                if w.len() != 3 || w.iter().any(|x| *x < 0.0) || !(total > 0.0) {
                    return Err(CliError::Config(format!("Pauli weights need three nonnegative values, got {s:?}")));
                }
                NoiseSpec::pauli(gamma * w[0] / total, gamma * w[1] / total, gamma * w[2] / total)
            }
            None => return Err(CliError::Config(format!("unknown noise kind {s:?}"))),
        },
    };
    Ok(spec.with_placement(placement))
}

pub fn parse_initial(s: &str) -> Result<InitialState, CliError> {
    let s = s.trim();
    match s {
        "zero" => return Ok(InitialState::Zero),
        "plus" => return Ok(InitialState::Plus),
        "ground" => return Ok(InitialState::Ground),
        "worst_one_step" => return Ok(InitialState::WorstOneStep),
        _ => {}
    }
    let inner = s
        .strip_prefix("haar(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| CliError::Config(format!("unknown initial state {s:?}")))?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    let bad = || CliError::Config(format!("haar(seed,count) expects two integers, got {s:?}"));
    match parts.as_slice() {
        [seed, count] => {
            let count: usize = count.parse().map_err(|_| bad())?;
            if count == 0 {
                return Err(bad());
            }
            Ok(InitialState::Haar {
                seed: seed.parse().map_err(|_| bad())?,
                count,
            })
        }
        [seed] => Ok(InitialState::Haar {
            seed: seed.parse().map_err(|_| bad())?,
            count: 1,
        }),
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_selectors() {
        assert_eq!(parse_initial("haar(7, 20)").unwrap(), InitialState::Haar { seed: 7, count: 20 });
        assert_eq!(parse_initial("zero").unwrap(), InitialState::Zero);
        assert!(parse_initial("haar(7,0)").is_err());
        assert!(parse_initial("mixed").is_err());
    }

    #[test]
    fn builtin_specs() {
        let h = build_builtin("tfi:J=2,h=1,open", 4).unwrap();
        assert_eq!(h.n_groups(), 2);
        assert!(build_builtin("tfi:K=1", 4).is_err());
        assert!(build_builtin("hubbard:v=1,u=2", 5).is_err());
        assert_eq!(build_builtin("hubbard:v=1,u=2", 4).unwrap().n_qubits(), 4);
        assert_eq!(build_builtin("powerlaw:alpha=4", 3).unwrap().n_groups(), 3);
    }

    #[test]
    fn pauli_weights_scale_to_gamma() {
        let spec = parse_noise("pauli:1,0,3", 0.004, "per_step").unwrap();
        assert!((spec.base_rate() - 0.004).abs() < 1e-15);
        assert!(parse_noise("pauli:1,2", 0.004, "per_step").is_err());
        assert!(parse_noise("thermal", 0.004, "per_step").is_err());
    }
}
