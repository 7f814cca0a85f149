use std::path::{Path, PathBuf};
use std::time::Instant;

use noisy_trotter::metrics::{worst_one_step_state, StepRecord};
use noisy_trotter::{
    build_schedule, ground_state, haar_random_state, step_unitary, DensityMatrix, ErrorTrace, ErrorTracker,
    MetricOptions,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{parse_initial, parse_noise, Experiment, ExperimentArgs, InitialState};
use crate::error::CliError;
use crate::io::{emit, read_bytes, sha256_hex, sidecar, write_atomic, write_json, VERSION};

/// Simulates one `(n, γ)` cell. Haar ensembles with `count > 1` return the
/// step-wise mean of the member traces.
pub fn run_cell(exp: &Experiment, n: usize, gamma: f64) -> Result<ErrorTrace, CliError> {
    let h = exp.build_hamiltonian(Some(n))?;
    let schedule = build_schedule(exp.order, h.n_groups())?;
    let time = exp.time_for(n);
    let spec = parse_noise(&exp.noise, gamma, &exp.placement)?;
    let tracker = ErrorTracker::new(&h, &schedule, exp.steps, time, spec)?;
    let options = MetricOptions::default();
    let initial = parse_initial(&exp.initial)?;
    let rho0 = match initial {
        InitialState::Zero => DensityMatrix::zero_state(n),
        InitialState::Plus => DensityMatrix::plus_state(n),
        InitialState::Ground => ground_state(&h)?.1,
        InitialState::WorstOneStep => {
            let pf = step_unitary(&h, &schedule, time / exp.steps as f64)?;
            worst_one_step_state(tracker.exact_step(), &pf)?
        }
        InitialState::Haar { seed, count } => {
            let traces = (0..count as u64)
                .map(|k| tracker.run(&haar_random_state(n, seed.wrapping_add(k))?, options))
                .collect::<noisy_trotter::Result<Vec<_>>>()?;
            return Ok(mean_trace(&traces));
        }
    };
    Ok(tracker.run(&rho0, options)?)
}

fn mean_trace(traces: &[ErrorTrace]) -> ErrorTrace {
    let k = traces.len() as f64;
    let avg = |f: &dyn Fn(&ErrorTrace) -> f64| traces.iter().map(f).sum::<f64>() / k;
    let records = (0..traces[0].records.len())
        .map(|i| StepRecord {
            step: traces[0].records[i].step,
            phys: avg(&|t| t.records[i].phys),
            alg: avg(&|t| t.records[i].alg),
            tot: avg(&|t| t.records[i].tot),
            entropy_ratio: avg(&|t| t.records[i].entropy_ratio),
            rel_entropy: avg(&|t| t.records[i].rel_entropy),
        })
        .collect();
    ErrorTrace {
        records,
        acc_direct: avg(&|t| t.acc_direct),
        acc_sum: avg(&|t| t.acc_sum),
        rel_entropy_initial: avg(&|t| t.rel_entropy_initial),
    }
}

fn hamiltonian_digest(exp: &Experiment) -> Result<Option<String>, CliError> {
    match &exp.hamiltonian {
        crate::config::HamiltonianSource::Spec(s) if Path::new(s).is_file() => {
            Ok(Some(sha256_hex(&read_bytes(Path::new(s))?)))
        }
        _ => Ok(None),
    }
}

pub fn cmd_simulate(args: &ExperimentArgs) -> Result<(), CliError> {
    let exp = Experiment::resolve(args)?;
    let sizes = exp.sizes()?;
    let (n, gamma) = match (sizes.as_slice(), exp.gamma.as_slice()) {
        ([n], [g]) => (*n, *g),
        _ => return Err(CliError::Config("simulate takes a single n and γ; use sweep for grids".into())),
    };
    let start = Instant::now();
    let trace = run_cell(&exp, n, gamma)?;
    let runtime = start.elapsed().as_secs_f64();
    let csv = trace.to_csv();
    let digest = sha256_hex(csv.as_bytes());
    let summary = json!({
        "version": VERSION,
        "n": n,
        "gamma": gamma,
        "time": exp.time_for(n),
        "steps": exp.steps,
        "acc_direct": trace.acc_direct,
        "acc_sum": trace.acc_sum,
        "rel_entropy_initial": trace.rel_entropy_initial,
        "runtime_seconds": runtime,
        "trace_sha256": digest,
        "hamiltonian_sha256": hamiltonian_digest(&exp)?,
        "experiment": exp,
    });
    match &exp.out {
        Some(path) => {
            write_atomic(path, csv.as_bytes())?;
            write_json(&sidecar(path, "summary.json"), &summary)?;
        }
        None => {
            emit(None, csv.as_bytes())?;
            eprintln!("{}", serde_json::to_string(&summary).map_err(noisy_trotter::Error::from)?);
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestCell {
    pub n: usize,
    pub gamma: f64,
    pub time: f64,
    /// Path relative to the manifest's directory.
    pub file: Option<String>,
    pub sha256: Option<String>,
    pub acc_direct: Option<f64>,
    pub acc_sum: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub experiment: Experiment,
    pub hamiltonian_sha256: Option<String>,
    pub cells: Vec<ManifestCell>,
    /// Digest over every cell's `(n, γ, sha256)`; changes iff some trace does.
    pub digest: String,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn cell_file_name(n: usize, gamma: f64) -> String {
    format!("trace_n{n}_gamma{gamma}.csv")
}

fn manifest_digest(cells: &[ManifestCell]) -> String {
    let mut s = String::new();
    for c in cells {
        s.push_str(&format!("{},{:e},{}\n", c.n, c.gamma, c.sha256.as_deref().unwrap_or("failed")));
    }
    sha256_hex(s.as_bytes())
}

pub fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(CliError::Config("--workers must be >= 1".into()));
        }
        b = b.num_threads(w);
    }
    b.build().map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))
}

pub fn cmd_sweep(args: &ExperimentArgs) -> Result<(), CliError> {
    let exp = Experiment::resolve(args)?;
    let sizes = exp.sizes()?;
    let out: PathBuf = exp
        .out
        .clone()
        .ok_or_else(|| CliError::Config("sweep needs --out <directory>".into()))?;
    // Fail fast on configuration problems before spending compute.
    for &n in &sizes {
        exp.build_hamiltonian(Some(n))?;
    }
    let grid: Vec<(usize, f64)> = sizes
        .iter()
        .flat_map(|&n| exp.gamma.iter().map(move |&g| (n, g)))
        .collect();
    let pool = thread_pool(exp.workers)?;
    let cells: Vec<ManifestCell> = pool.install(|| {
        grid.par_iter()
            .map(|&(n, gamma)| {
                let mut cell = ManifestCell {
                    n,
                    gamma,
                    time: exp.time_for(n),
                    file: None,
                    sha256: None,
                    acc_direct: None,
                    acc_sum: None,
                    error: None,
                };
                let name = cell_file_name(n, gamma);
                let res = run_cell(&exp, n, gamma).and_then(|trace| {
                    let csv = trace.to_csv();
                    write_atomic(&out.join(&name), csv.as_bytes())?;
                    Ok((trace, sha256_hex(csv.as_bytes())))
                });
                match res {
                    Ok((trace, digest)) => {
                        cell.file = Some(name);
                        cell.sha256 = Some(digest);
                        cell.acc_direct = Some(trace.acc_direct);
                        cell.acc_sum = Some(trace.acc_sum);
                    }
                    Err(e) => {
                        eprintln!("cell n={n} gamma={gamma}: {e}");
                        cell.error = Some(e.to_string());
                    }
                }
                cell
            })
            .collect()
    });
    let manifest = Manifest {
        version: VERSION.to_string(),
        hamiltonian_sha256: hamiltonian_digest(&exp)?,
        digest: manifest_digest(&cells),
        experiment: exp,
        cells,
    };
    write_json(&out.join(MANIFEST_NAME), &manifest)?;
    let failed = manifest.cells.iter().filter(|c| c.error.is_some()).count();
    if failed > 0 {
        return Err(CliError::Partial {
            failed,
            total: manifest.cells.len(),
        });
    }
    Ok(())
}
