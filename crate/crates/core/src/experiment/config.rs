use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::cost::LambdaParams;
use crate::grid::{GridMap, MapDocument};
use crate::sim::SimParams;
use crate::solver::SolverConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub rows: usize,
    pub cols: usize,
    pub segment_length_m: f64,
    pub speed_choices: Vec<f64>,
    pub map_seed: u64,
    /// Serialized map to load instead of drawing speed limits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map_path: Option<PathBuf>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            rows: 6,
            cols: 6,
            segment_length_m: 1000.0,
            speed_choices: vec![11.0, 17.0, 22.0, 28.0],
            map_seed: 1,
            map_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficConfig {
    pub n_cars: usize,
    pub f_straight: f64,
    pub sim_seed: u64,
    pub car_spacing_m: f64,
    pub gap_threshold_m: f64,
    /// Feed measured queue straight fractions to the objective (else `f_straight`).
    pub measured_fractions: bool,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            n_cars: 4320,
            f_straight: 0.7,
            sim_seed: 1,
            car_spacing_m: 5.0,
            gap_threshold_m: 5.0,
            measured_fractions: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub total_iterations: usize,
    pub resolve_every: usize,
    pub step_dt_s: f64,
    pub tau_tolerance_s: f64,
    /// Dwell per mode of the fixed-cycle baseline.
    pub fixed_cycle_period_s: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            total_iterations: 150,
            resolve_every: 5,
            step_dt_s: 1.0,
            tau_tolerance_s: 2.5,
            fixed_cycle_period_s: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Also write per-iteration signal and queue state to `state.csv`.
    pub state_dump: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("results"),
            state_dump: false,
        }
    }
}

/// Everything one experiment needs. Every field is optional in JSON; the
/// defaults reproduce the reference 6x6 setup.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub traffic: TrafficConfig,
    pub lambdas: LambdaParams,
    pub schedule: ScheduleConfig,
    pub solver: SolverConfig,
    pub outputs: OutputConfig,
}

fn invalid(field: &str, reason: impl Into<String>) -> ExperimentError {
    ExperimentError::InvalidConfig {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<(), ExperimentError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ExperimentError::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let g = &self.grid;
        if g.rows == 0 {
            return Err(invalid("grid.rows", "must be at least 1"));
        }
        if g.cols == 0 {
            return Err(invalid("grid.cols", "must be at least 1"));
        }
        positive("grid.segment_length_m", g.segment_length_m)?;
        if g.speed_choices.is_empty() {
            return Err(invalid("grid.speed_choices", "must not be empty"));
        }
        for &s in &g.speed_choices {
            positive("grid.speed_choices", s)?;
        }
        let t = &self.traffic;
        if !(0.0..=1.0).contains(&t.f_straight) {
            return Err(invalid("traffic.f_straight", format!("must lie in [0, 1], got {}", t.f_straight)));
        }
        positive("traffic.car_spacing_m", t.car_spacing_m)?;
        positive("traffic.gap_threshold_m", t.gap_threshold_m)?;
        self.lambdas.validate().map_err(|e| {
            let field = match &e {
                crate::cost::CostError::BadLambda { name, .. } => format!("lambdas.{name}"),
                _ => "lambdas.lambda4".to_string(),
            };
            invalid(&field, e.to_string())
        })?;
        let s = &self.schedule;
        if s.resolve_every == 0 {
            return Err(invalid("schedule.resolve_every", "must be at least 1"));
        }
        positive("schedule.step_dt_s", s.step_dt_s)?;
        positive("schedule.tau_tolerance_s", s.tau_tolerance_s)?;
        positive("schedule.fixed_cycle_period_s", s.fixed_cycle_period_s)?;
        if !matches!(self.solver.name.as_str(), "tabu" | "exact") {
            return Err(invalid("solver.name", format!("unknown solver `{}`", self.solver.name)));
        }
        if self.solver.tabu.tenure == 0 {
            return Err(invalid("solver.tabu.tenure", "must be at least 1"));
        }
        if self.solver.tabu.restarts == 0 {
            return Err(invalid("solver.tabu.restarts", "must be at least 1"));
        }
        Ok(())
    }

    /// Loads `grid.map_path` if set, otherwise draws the map from `grid.map_seed`.
    pub fn build_map(&self) -> Result<GridMap, ExperimentError> {
        let g = &self.grid;
        if let Some(path) = &g.map_path {
            let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::Io {
                path: path.clone(),
                message: e.to_string(),
            })?;
            let doc: MapDocument =
                serde_json::from_str(&text).map_err(|e| invalid("grid.map_path", e.to_string()))?;
            return GridMap::from_document(&doc).map_err(|e| invalid("grid.map_path", e.to_string()));
        }
        GridMap::build(g.rows, g.cols, g.segment_length_m, &g.speed_choices, g.map_seed)
            .map_err(|e| invalid("grid", e.to_string()))
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            f_straight: self.traffic.f_straight,
            car_spacing_m: self.traffic.car_spacing_m,
            gap_threshold_m: self.traffic.gap_threshold_m,
            measured_fractions: self.traffic.measured_fractions,
        }
    }

    /// Number of QUBO solves a solving controller performs.
    pub fn solve_count(&self) -> usize {
        self.schedule.total_iterations.div_ceil(self.schedule.resolve_every)
    }
}
