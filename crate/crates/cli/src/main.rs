//! `rwdre`: runs oracle, simulation, comparison and sweep experiments from a
//! TOML configuration and writes reproducible artifacts.
//!
//! Exit codes: 0 success, 1 a check failed, 2 configuration error,
//! 3 a modelling assumption does not hold.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod modes;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Mode;
use modes::{Failure, Options};

#[derive(Debug, Parser)]
#[command(name = "rwdre", version, about = "Random walks in dynamic random environments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact finite-state computation and bound checks.
    Oracle(RunArgs),
    /// Coupled Monte Carlo simulation.
    Simulate(RunArgs),
    /// Oracle and simulation on one torus, with agreement checks.
    Compare(RunArgs),
    /// Exact velocity over a list of perturbation strengths.
    Sweep(RunArgs),
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `run.out`, defaults to `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for replica and sweep parallelism.
    #[arg(long)]
    threads: Option<usize>,
    /// Also write every replica path to `paths.csv`.
    #[arg(long)]
    dump_paths: bool,
}

fn execute(mode: Mode, args: &RunArgs) -> Result<(), Failure> {
    let source = fs::read_to_string(&args.config)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", args.config.display())))?;
    let exp = config::parse(&source, mode).map_err(Failure::Config)?;
    let seed = match (args.seed.or(exp.seed), mode) {
        (Some(s), _) => s,
        (None, Mode::Simulate | Mode::Compare) => {
            return Err(Failure::config("a seed is required: set run.seed or --seed"))
        }
        (None, Mode::Sweep) if exp.horizon.is_some() => {
            return Err(Failure::config("a seed is required: set run.seed or --seed"))
        }
        (None, _) => 0,
    };
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(format!("--threads: {e}")))?;
    }
    let opts = Options {
        seed,
        dump_paths: args.dump_paths,
    };
    let artifacts = modes::run(&exp, mode, &opts)?;

    let dir = args
        .out
        .clone()
        .or_else(|| exp.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| "out".into());
    let manifest = output::Manifest::new(mode.name(), seed, &exp.source, &artifacts.files);
    output::write_all(&dir, &artifacts.files, &manifest)
        .map_err(|e| Failure::config(format!("cannot write {}: {e}", dir.display())))?;

    let failed = artifacts.checks.iter().filter(|c| !c.pass).count();
    match artifacts.first_failure() {
        Some(c) => Err(Failure::Numerical(format!(
            "{failed} of {} checks failed; first: {} violates {} (lhs {:e}, rhs {:e})",
            artifacts.checks.len(),
            c.check_id,
            c.anchor,
            c.lhs,
            c.rhs
        ))),
        None => {
            println!(
                "{}: {} checks passed; artifacts in {}",
                mode.name(),
                artifacts.checks.len(),
                dir.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.command {
        Command::Oracle(a) => (Mode::Oracle, a),
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Compare(a) => (Mode::Compare, a),
        Command::Sweep(a) => (Mode::Sweep, a),
    };
    match execute(mode, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("rwdre {}: {}", mode.name(), f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
