//! Experiment driver: configuration, the closed control loop, result files
//! and the solver verification harness.

mod config;
mod control;
mod output;
mod verify;

pub use config::{ExperimentConfig, GridConfig, OutputConfig, ScheduleConfig, TrafficConfig};
pub use control::{run_loop, Controller, RunOutcome, SolveRecord, StateRow};
pub use output::{cmd_compare, cmd_export_map, cmd_run, CompareOutcome, RunSummary};
pub use verify::{cmd_verify, TrialOutcome, VerifyOptions, VerifyReport};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("could not parse config: {0}")]
    ConfigParse(String),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error(transparent)]
    Cost(#[from] crate::cost::CostError),
    #[error(transparent)]
    Solver(#[from] crate::solver::SolverError),
    #[error(transparent)]
    Report(#[from] crate::metrics::ReportError),
    #[error("car count not conserved at t = {t}: {before} before, {after} after, {exited} exited")]
    Conservation {
        t: f64,
        before: usize,
        after: usize,
        exited: usize,
    },
    #[error("verification: {0}")]
    Verify(String),
}
