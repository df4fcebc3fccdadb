use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use traffic_qubo::experiment::{
    cmd_compare, cmd_export_map, cmd_run, cmd_verify, Controller, ExperimentConfig, RunSummary, VerifyOptions,
};

#[derive(Parser)]
#[command(name = "traffic-qubo", version, about = "QUBO traffic-signal control on a simulated grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON config; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `outputs.directory`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Simulation seed (overrides `traffic.sim_seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Solver name: `tabu` or `exact_onehot`.
    #[arg(long)]
    solver: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one controller.
    Run {
        /// coordinated, no_coordination or fixed_cycle
        #[arg(long)]
        controller: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run all three controllers and report savings.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Check tabu search against exact enumeration on small grids.
    Verify {
        #[arg(long, default_value_t = 2)]
        rows: usize,
        #[arg(long, default_value_t = 2)]
        cols: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write the configured map as JSON.
    ExportMap {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Destination file.
        #[arg(long, default_value = "map.json")]
        out: PathBuf,
    },
}

fn load(path: Option<&Path>) -> Result<ExperimentConfig> {
    let config = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    config.validate()?;
    Ok(config)
}

fn resolve(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut config = load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        config.traffic.sim_seed = seed;
    }
    if let Some(name) = &common.solver {
        config.solver.name = name.clone();
    }
    if let Some(out) = &common.out {
        config.outputs.directory = out.clone();
    }
    config.validate()?;
    let out = config.outputs.directory.clone();
    Ok((config, out))
}

fn print_run(summary: &RunSummary) {
    println!(
        "{}: {:.1} car-seconds wasted, {} solves ({} repaired), {} of {} cars exited",
        summary.controller,
        summary.total_car_seconds,
        summary.solves,
        summary.repaired_solves,
        summary.cars_exited,
        summary.initial_cars
    );
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { controller, common } => {
            let Some(controller) = Controller::parse(&controller) else {
                bail!("unknown controller `{controller}` (expected coordinated, no_coordination or fixed_cycle)");
            };
            let (config, out) = resolve(&common)?;
            let outcome = cmd_run(&config, controller, &out)?;
            print_run(&RunSummary::of(&outcome));
            println!("results in {}", out.display());
        }
        Command::Compare { common } => {
            let (config, out) = resolve(&common)?;
            let outcome = cmd_compare(&config, &out)?;
            print!("{}", outcome.report.render());
            println!("results in {}", out.display());
        }
        Command::Verify {
            rows,
            cols,
            trials,
            seed,
            config,
        } => {
            let config = load(config.as_deref())?;
            let report = cmd_verify(&config, &VerifyOptions { rows, cols, trials, seed })?;
            print!("{}", report.render());
            if !report.enumeration_consistent() {
                bail!("one-hot oracle disagrees with full enumeration");
            }
        }
        Command::ExportMap { config, out } => {
            let config = load(config.as_deref())?;
            let path = cmd_export_map(&config, &out).context("exporting map")?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
