//! Result files.
//!
//! `metrics.csv`: `controller,t,increment,cumulative`
//! `timings.csv`: `solve_index,t,wall_seconds,energy,repaired`
//! `state.csv` (optional): `t,intersection,mode,lane1,lane2,lane3,lane4`
//! `summary.json`: resolved config, totals and, for comparisons, the report.
//!
//! Each CSV starts with a `# config: <json>` comment line.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{run_loop, Controller, ExperimentConfig, ExperimentError, RunOutcome};
use crate::metrics::{report_comparison, ComparisonReport};

const METRICS_HEADER: &str = "controller,t,increment,cumulative";
const TIMINGS_HEADER: &str = "solve_index,t,wall_seconds,energy,repaired";
const STATE_HEADER: &str = "t,intersection,mode,lane1,lane2,lane3,lane4";

/// Per-run figures that are deterministic (no wall-clock values).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub controller: String,
    pub total_car_seconds: f64,
    pub total_car_hours: f64,
    pub solves: usize,
    pub raw_feasible_solves: usize,
    pub repaired_solves: usize,
    pub initial_cars: usize,
    pub cars_exited: usize,
    pub cars_remaining: usize,
}

impl RunSummary {
    pub fn of(run: &RunOutcome) -> Self {
        Self {
            controller: run.controller.label().to_string(),
            total_car_seconds: run.ledger.cumulative,
            total_car_hours: run.ledger.car_hours(),
            solves: run.solves.len(),
            raw_feasible_solves: run.solves.iter().filter(|s| s.raw_feasible).count(),
            repaired_solves: run.solves.iter().filter(|s| s.repaired()).count(),
            initial_cars: run.initial_cars,
            cars_exited: run.cars_exited(),
            cars_remaining: run.cars_remaining(),
        }
    }
}

#[derive(Serialize)]
struct RunDocument<'a> {
    config: &'a ExperimentConfig,
    run: RunSummary,
}

#[derive(Serialize)]
struct CompareDocument<'a> {
    config: &'a ExperimentConfig,
    runs: Vec<RunSummary>,
    report: &'a ComparisonReport,
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub runs: Vec<RunOutcome>,
    pub report: ComparisonReport,
}

fn io_err(path: &Path, e: std::io::Error) -> ExperimentError {
    ExperimentError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Writes via a temporary sibling and a rename.
fn write_atomic(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn config_line(config: &ExperimentConfig) -> String {
    format!("# config: {}\n", config.to_json())
}

fn metrics_rows(out: &mut String, run: &RunOutcome) {
    let mut cumulative = 0.0;
    for &(t, inc) in &run.ledger.series {
        cumulative += inc;
        let _ = writeln!(out, "{},{t},{inc},{cumulative}", run.controller.label());
    }
}

fn timings_csv(config: &ExperimentConfig, run: &RunOutcome) -> String {
    let mut out = config_line(config);
    out.push_str(TIMINGS_HEADER);
    out.push('\n');
    for s in &run.solves {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.solve_index,
            s.t,
            s.wall_seconds,
            s.energy,
            u8::from(s.repaired())
        );
    }
    out
}

fn state_csv(config: &ExperimentConfig, run: &RunOutcome) -> String {
    let mut out = config_line(config);
    out.push_str(STATE_HEADER);
    out.push('\n');
    for r in &run.state_rows {
        let [a, b, c, d] = r.queues;
        let _ = writeln!(out, "{},{},{},{a},{b},{c},{d}", r.t, r.intersection, r.mode);
    }
    out
}

fn prepare_dir(dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Runs one controller and writes `metrics.csv`, `timings.csv` and
/// `summary.json` (plus `state.csv` when enabled) into `out_dir`.
pub fn cmd_run(
    config: &ExperimentConfig,
    controller: Controller,
    out_dir: &Path,
) -> Result<RunOutcome, ExperimentError> {
    config.validate()?;
    let map = config.build_map()?;
    let run = run_loop(&map, controller, config)?;

    prepare_dir(out_dir)?;
    let mut metrics = config_line(config);
    metrics.push_str(METRICS_HEADER);
    metrics.push('\n');
    metrics_rows(&mut metrics, &run);
    write_atomic(&out_dir.join("metrics.csv"), &metrics)?;
    write_atomic(&out_dir.join("timings.csv"), &timings_csv(config, &run))?;
    if config.outputs.state_dump {
        write_atomic(&out_dir.join("state.csv"), &state_csv(config, &run))?;
    }
    let doc = RunDocument {
        config,
        run: RunSummary::of(&run),
    };
    let json = serde_json::to_string_pretty(&doc).expect("summary serializes");
    write_atomic(&out_dir.join("summary.json"), &(json + "\n"))?;
    Ok(run)
}

/// Runs all three controllers on the same map and seeds, then writes a
/// combined `metrics.csv`, one `timings_<controller>.csv` per solving
/// controller and a `summary.json` holding the comparison report.
pub fn cmd_compare(config: &ExperimentConfig, out_dir: &Path) -> Result<CompareOutcome, ExperimentError> {
    config.validate()?;
    let map = config.build_map()?;
    let runs = std::thread::scope(|scope| {
        let handles: Vec<_> = Controller::ALL
            .iter()
            .map(|&c| {
                let map = &map;
                scope.spawn(move || run_loop(map, c, config))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("controller run panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let ledgers: Vec<_> = runs.iter().map(|r| r.ledger.clone()).collect();
    let report = report_comparison(&ledgers)?;

    prepare_dir(out_dir)?;
    let mut metrics = config_line(config);
    metrics.push_str(METRICS_HEADER);
    metrics.push('\n');
    for run in &runs {
        metrics_rows(&mut metrics, run);
    }
    write_atomic(&out_dir.join("metrics.csv"), &metrics)?;
    for run in runs.iter().filter(|r| r.controller != Controller::FixedCycle) {
        let name = format!("timings_{}.csv", run.controller.label());
        write_atomic(&out_dir.join(name), &timings_csv(config, run))?;
    }
    let doc = CompareDocument {
        config,
        runs: runs.iter().map(RunSummary::of).collect(),
        report: &report,
    };
    let json = serde_json::to_string_pretty(&doc).expect("summary serializes");
    write_atomic(&out_dir.join("summary.json"), &(json + "\n"))?;
    Ok(CompareOutcome { runs, report })
}

/// Writes the configured map as JSON to `path`.
pub fn cmd_export_map(config: &ExperimentConfig, path: &Path) -> Result<PathBuf, ExperimentError> {
    config.validate()?;
    let map = config.build_map()?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        prepare_dir(parent)?;
    }
    let json = serde_json::to_string_pretty(&map.to_document()).expect("map serializes");
    write_atomic(path, &(json + "\n"))?;
    Ok(path.to_path_buf())
}
