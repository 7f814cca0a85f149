//! `noisy-trotter`: simulate noisy Trotter circuits, sweep parameter grids,
//! fit error models and plan fault-tolerant resources.
//!
//! Exit codes: 0 success, 1 I/O or partial sweep failure, 2 configuration
//! error, 3 size limit exceeded, 4 numerical failure.

mod analysis;
mod config;
mod error;
mod io;
mod simulate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::analysis::{FitArgs, PhaseArgs, PlanArgs, ResourcesArgs};
use crate::config::ExperimentArgs;
use crate::error::{CliError, EXIT_CONFIG};

#[derive(Parser, Debug)]
#[command(name = "noisy-trotter", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one noisy circuit and write its per-step error trace.
    Simulate(ExperimentArgs),
    /// Run every (γ, n) cell of a grid and write traces plus a manifest.
    Sweep(ExperimentArgs),
    /// Fit an error model from a sweep manifest.
    Fit(FitArgs),
    /// Compare model-based and worst-case resource plans.
    Plan(PlanArgs),
    /// Tabulate model vs worst-case errors on a (γ, r) grid.
    Phase(PhaseArgs),
    /// Surface-code distance and qubit count for a logical error rate.
    Resources(ResourcesArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => simulate::cmd_simulate(&a),
        Command::Sweep(a) => simulate::cmd_sweep(&a),
        Command::Fit(a) => analysis::cmd_fit(&a),
        Command::Plan(a) => analysis::cmd_plan(&a),
        Command::Phase(a) => analysis::cmd_phase(&a),
        Command::Resources(a) => analysis::cmd_resources(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
