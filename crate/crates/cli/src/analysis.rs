use std::collections::BTreeMap;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::Args;
use noisy_trotter::metrics::{burn_in, worst_case_algorithmic_prefactor};
use noisy_trotter::planner::{phase_csv, phase_diagram};
use noisy_trotter::{
    build_schedule, extrapolate_in_n, fit_model_coefficients, ft_resources, plan_comparison, ErrorModel,
    ErrorTrace, FitConfig, FtParams, GammaTrace, WorstCaseModel,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::io::{emit, read_bytes, sha256_hex, sidecar, write_json, VERSION};
use crate::simulate::{thread_pool, Manifest};

#[derive(Args, Debug, Clone)]
pub struct FitArgs {
    /// Manifest written by `sweep`.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Size to extrapolate to when several sizes were swept (default: the largest).
    #[arg(long)]
    pub target_n: Option<usize>,
    /// Keep the mean fitted decay constants instead of fixing them to 1/2.
    #[arg(long)]
    pub no_clamp: bool,
    /// First step included in the fits (default: the burn-in length).
    #[arg(long)]
    pub window_start: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct FtArgs {
    /// Surface-code threshold γ0.
    #[arg(long, default_value_t = FtParams::default().gamma0)]
    pub gamma0: f64,
    /// Physical-to-threshold ratio.
    #[arg(long, default_value_t = FtParams::default().ratio)]
    pub ratio: f64,
}

impl FtArgs {
    fn params(&self) -> FtParams {
        FtParams {
            gamma0: self.gamma0,
            ratio: self.ratio,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct PlanArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Target accumulated error ε.
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub time: f64,
    /// Worst-case one-step prefactor; defaults to the value stored in the model.
    #[arg(long)]
    pub b_worst: Option<f64>,
    #[command(flatten)]
    pub ft: FtArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct PhaseArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub time: f64,
    #[arg(long)]
    pub b_worst: Option<f64>,
    /// Log-spaced γ grid.
    #[arg(long, default_value_t = 1e-4)]
    pub gamma_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub gamma_max: f64,
    #[arg(long, default_value_t = 50)]
    pub gamma_count: usize,
    /// Linearly spaced grid of Trotter numbers.
    #[arg(long, default_value_t = 10)]
    pub r_min: usize,
    #[arg(long, default_value_t = 500)]
    pub r_max: usize,
    #[arg(long, default_value_t = 50)]
    pub r_count: usize,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ResourcesArgs {
    /// Logical error rate γ_L required of each gate.
    #[arg(long)]
    pub gamma_l: f64,
    #[command(flatten)]
    pub ft: FtArgs,
}

fn read_manifest(path: &Path) -> Result<(Manifest, String), CliError> {
    let bytes = read_bytes(path)?;
    let m: Manifest = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Config(format!("manifest {}: {e}", path.display())))?;
    Ok((m, sha256_hex(&bytes)))
}

/// Model JSON with the CLI's provenance block attached; `ErrorModel::load`
/// ignores the extra key.
fn model_json(model: &ErrorModel, inputs: Value) -> Result<Value, CliError> {
    let mut v = serde_json::to_value(model).map_err(noisy_trotter::Error::from)?;
    v["inputs"] = inputs;
    v["version"] = VERSION.into();
    Ok(v)
}

pub fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let (manifest, manifest_sha) = read_manifest(&args.manifest)?;
    let dir = args.manifest.parent().unwrap_or(Path::new("."));
    let exp = &manifest.experiment;
    let mut by_n: BTreeMap<usize, Vec<GammaTrace>> = BTreeMap::new();
    for cell in &manifest.cells {
        let (Some(file), Some(sha)) = (&cell.file, &cell.sha256) else {
            eprintln!("skipping failed cell n={} gamma={}", cell.n, cell.gamma);
            continue;
        };
        let path = dir.join(file);
        let bytes = read_bytes(&path)?;
        if &sha256_hex(&bytes) != sha {
            return Err(CliError::Config(format!("digest mismatch for {}", path.display())));
        }
        let trace = ErrorTrace::read_csv(BufReader::new(bytes.as_slice()))?;
        by_n.entry(cell.n).or_default().push(GammaTrace {
            gamma: cell.gamma,
            trace,
        });
    }
    if by_n.is_empty() {
        return Err(CliError::Config("manifest has no successful cells".into()));
    }
    let mut models = Vec::new();
    for (&n, traces) in &by_n {
        let h = exp.build_hamiltonian(Some(n))?;
        let schedule = build_schedule(exp.order, h.n_groups())?;
        let time = exp.time_for(n);
        // Per-step and per-time noise act once per step; per-layer noise once per layer.
        let upsilon = if exp.placement == "per_layer" { schedule.layers } else { 1 };
        let config = FitConfig {
            order: exp.order,
            n_qubits: n,
            time,
            steps: exp.steps,
            upsilon,
            window_start: args.window_start.unwrap_or_else(|| burn_in(exp.steps)),
            placement: exp.placement.clone(),
        };
        let mut model = fit_model_coefficients(traces, &config)?;
        model.worst_case_b = Some(worst_case_algorithmic_prefactor(&h, &schedule, time / exp.steps as f64)?);
        let inputs = json!({ "manifest_sha256": manifest_sha, "manifest_digest": manifest.digest });
        write_json(&sidecar(&args.out, &format!("n{n}.json")), &model_json(&model, inputs)?)?;
        models.push(model);
    }
    let target = args.target_n.unwrap_or(*by_n.keys().last().expect("nonempty"));
    // Extrapolation needs three sizes; with fewer, the target must be a swept size.
    let model = if models.len() >= 3 {
        extrapolate_in_n(&models, target, !args.no_clamp)?
    } else {
        let i = models.iter().position(|m| m.n_qubits == target).ok_or_else(|| {
            CliError::Config(format!("extrapolating to n = {target} needs at least three swept sizes"))
        })?;
        models.swap_remove(i)
    };
    let inputs = json!({
        "manifest_sha256": manifest_sha,
        "manifest_digest": manifest.digest,
        "sizes": by_n.keys().collect::<Vec<_>>(),
        "target_n": model.n_qubits,
    });
    write_json(&args.out, &model_json(&model, inputs)?)
}

fn load_model(path: &Path) -> Result<(ErrorModel, String), CliError> {
    let sha = sha256_hex(&read_bytes(path)?);
    Ok((ErrorModel::load(path)?, sha))
}

fn b_worst(model: &ErrorModel, flag: Option<f64>) -> Result<f64, CliError> {
    let b = flag
        .or(model.worst_case_b)
        .ok_or_else(|| CliError::Config("model has no worst-case prefactor; pass --b-worst".into()))?;
    if !(b.is_finite() && b >= 0.0) {
        return Err(CliError::Config(format!("--b-worst must be finite and >= 0, got {b}")));
    }
    Ok(b)
}

pub fn cmd_plan(args: &PlanArgs) -> Result<(), CliError> {
    let (model, sha) = load_model(&args.model)?;
    let worst = WorstCaseModel {
        n_qubits: model.n_qubits,
        b_worst: b_worst(&model, args.b_worst)?,
        order: model.order,
    };
    let mut plan = plan_comparison(&model, &worst, args.epsilon, args.time, &args.ft.params())?;
    plan.provenance.push(("version".into(), VERSION.into()));
    plan.provenance.push(("model_sha256".into(), sha));
    plan.provenance.push(("b_worst".into(), format!("{:e}", worst.b_worst)));
    let mut s = serde_json::to_string_pretty(&plan).map_err(noisy_trotter::Error::from)?;
    s.push('\n');
    emit(args.out.as_deref(), s.as_bytes())
}

fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>, CliError> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || count == 0 {
        return Err(CliError::Config(format!("bad γ grid [{lo}, {hi}] x {count}")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect())
}

fn linear_r_grid(lo: usize, hi: usize, count: usize) -> Result<Vec<usize>, CliError> {
    if lo == 0 || hi < lo || count == 0 {
        return Err(CliError::Config(format!("bad r grid [{lo}, {hi}] x {count}")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..count)
        .map(|i| (lo as f64 + (hi - lo) as f64 * i as f64 / (count - 1) as f64).round() as usize)
        .collect())
}

pub fn cmd_phase(args: &PhaseArgs) -> Result<(), CliError> {
    let (model, sha) = load_model(&args.model)?;
    let b = b_worst(&model, args.b_worst)?;
    let gammas = log_grid(args.gamma_min, args.gamma_max, args.gamma_count)?;
    let rs = linear_r_grid(args.r_min, args.r_max, args.r_count)?;
    let pool = thread_pool(args.workers)?;
    let rows = pool.install(|| {
        gammas
            .par_iter()
            .map(|&g| phase_diagram(&model, &[g], &rs, args.time, model.n_qubits, b))
            .collect::<noisy_trotter::Result<Vec<_>>>()
    })?;
    let cells: Vec<_> = rows.into_iter().flatten().collect();
    let csv = phase_csv(&cells);
    emit(args.out.as_deref(), csv.as_bytes())?;
    if let Some(out) = &args.out {
        let prov = json!({
            "version": VERSION,
            "model_sha256": sha,
            "csv_sha256": sha256_hex(csv.as_bytes()),
            "time": args.time,
            "b_worst": b,
            "gamma_grid": { "min": args.gamma_min, "max": args.gamma_max, "count": args.gamma_count, "spacing": "log" },
            "r_grid": { "min": args.r_min, "max": args.r_max, "count": args.r_count, "spacing": "linear" },
        });
        write_json(&sidecar(out, "provenance.json"), &prov)?;
    }
    Ok(())
}

pub fn cmd_resources(args: &ResourcesArgs) -> Result<(), CliError> {
    let r = ft_resources(args.gamma_l, &args.ft.params())?;
    let line = format!("d_c={} N_c={}\n", r.d_c, r.n_c);
    emit(None, line.as_bytes())
}
