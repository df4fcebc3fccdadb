//! Solver validation: tabu search against exact enumeration on small grids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{ExperimentConfig, ExperimentError};
use crate::cost::{build_objective, Objective, QueueSnapshot};
use crate::grid::GridMap;
use crate::modes::NUM_LANES;
use crate::qubo::BinaryVector;
use crate::solver::{derive_seed, repair, solve_exact_onehot, solve_tabu, MAX_ONEHOT_INTERSECTIONS};

/// Largest layout cross-checked against plain 2^n enumeration.
const FULL_ENUMERATION_VARS: usize = 16;
const MATCH_TOLERANCE: f64 = 1e-9;
const MAX_QUEUE: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub rows: usize,
    pub cols: usize,
    pub trials: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            rows: 2,
            cols: 2,
            trials: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub t: f64,
    pub tabu_energy: f64,
    pub exact_energy: f64,
    /// `|tabu - exact| / |exact|` after repair, zero on a match.
    pub relative_gap: f64,
    pub matched: bool,
    pub raw_feasible: bool,
    /// Set when the one-hot oracle was also checked by full enumeration.
    pub enumeration_agrees: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub rows: usize,
    pub cols: usize,
    pub num_vars: usize,
    pub feasible_configurations: usize,
    pub trials: Vec<TrialOutcome>,
}

impl VerifyReport {
    pub fn matches(&self) -> usize {
        self.trials.iter().filter(|t| t.matched).count()
    }

    pub fn match_rate(&self) -> f64 {
        self.matches() as f64 / self.trials.len() as f64
    }

    pub fn worst_relative_gap(&self) -> f64 {
        self.trials.iter().map(|t| t.relative_gap).fold(0.0, f64::max)
    }

    pub fn raw_feasible(&self) -> usize {
        self.trials.iter().filter(|t| t.raw_feasible).count()
    }

    /// False if any full-enumeration cross-check disagreed.
    pub fn enumeration_consistent(&self) -> bool {
        self.trials.iter().all(|t| t.enumeration_agrees != Some(false))
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "{}x{} grid, {} variables, {} one-hot configurations\n",
            self.rows, self.cols, self.num_vars, self.feasible_configurations
        );
        out += &format!(
            "match rate {}/{} ({:.2})\nworst relative gap {:.3e}\nraw feasible {}/{}\n",
            self.matches(),
            self.trials.len(),
            self.match_rate(),
            self.worst_relative_gap(),
            self.raw_feasible(),
            self.trials.len()
        );
        if self.trials.iter().any(|t| t.enumeration_agrees.is_some()) {
            let verdict = if self.enumeration_consistent() { "agrees" } else { "DISAGREES" };
            out += &format!("one-hot oracle {verdict} with full enumeration\n");
        }
        out
    }
}

fn random_snapshot(rng: &mut ChaCha8Rng, n: usize, f: f64) -> QueueSnapshot {
    let counts = (0..n)
        .map(|_| {
            let mut lanes = [0u32; NUM_LANES];
            lanes.iter_mut().for_each(|c| *c = rng.gen_range(0..=MAX_QUEUE));
            lanes
        })
        .collect();
    QueueSnapshot::uniform(counts, f)
}

/// Minimum energy over one-hot vectors by walking all 2^n bit patterns.
fn enumerate_one_hot_minimum(objective: &Objective<f64>) -> f64 {
    let n = objective.layout.num_vars();
    let mut best = f64::INFINITY;
    for bits in 0u32..(1 << n) {
        let x = BinaryVector::from_bits((0..n).map(|k| (bits >> k & 1) as u8));
        if objective.layout.is_one_hot(&x) {
            best = best.min(objective.qubo.evaluate(&x).expect("layout sized vector") + objective.offset);
        }
    }
    best
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= MATCH_TOLERANCE * (1.0 + a.abs().max(b.abs()))
}

/// Builds `options.trials` random instances on a fresh map per trial and
/// compares repaired tabu solutions with the exact one-hot optimum.
///
/// Queue counts are uniform in `[0, 50]`; `t` is drawn from the solve times
/// of `config.schedule` so both gated and ungated coordination terms occur.
/// Lambdas, tolerance, speeds and tabu parameters come from `config`.
pub fn cmd_verify(config: &ExperimentConfig, options: &VerifyOptions) -> Result<VerifyReport, ExperimentError> {
    config.validate()?;
    if options.trials == 0 {
        return Err(ExperimentError::Verify("trials must be at least 1".into()));
    }
    let n = options.rows * options.cols;
    if n == 0 || n > MAX_ONEHOT_INTERSECTIONS {
        return Err(ExperimentError::Verify(format!(
            "{}x{} grid has {n} intersections; exact enumeration supports 1 to {MAX_ONEHOT_INTERSECTIONS}",
            options.rows, options.cols
        )));
    }
    let sched = &config.schedule;
    let solve_times: Vec<f64> = (0..config.solve_count())
        .map(|k| (k * sched.resolve_every) as f64 * sched.step_dt_s)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut trials = Vec::with_capacity(options.trials);
    let mut num_vars = 0;
    for trial in 0..options.trials {
        let map_seed = derive_seed(options.seed, trial as u64);
        let map = GridMap::build(
            options.rows,
            options.cols,
            config.grid.segment_length_m,
            &config.grid.speed_choices,
            map_seed,
        )
        .map_err(|e| ExperimentError::Verify(e.to_string()))?;
        let snapshot = random_snapshot(&mut rng, n, config.traffic.f_straight);
        let t = solve_times[rng.gen_range(0..solve_times.len())];
        let objective = build_objective::<f64>(&snapshot, &map, t, &config.lambdas, sched.tau_tolerance_s)?;
        num_vars = objective.layout.num_vars();

        let mut params = config.solver.tabu;
        params.seed = derive_seed(options.seed ^ 0x5eed, trial as u64);
        let tabu = solve_tabu(&objective.qubo, objective.offset, &params);
        let raw_feasible = objective.layout.is_one_hot(&tabu.x);
        let repaired = repair(&tabu.x, &objective.layout, &objective.clearance);
        let x = objective
            .layout
            .encode_modes(repaired.assignment.as_slice())
            .expect("repair yields valid modes");
        let tabu_energy = objective.qubo.evaluate(&x).expect("layout sized vector") + objective.offset;

        let exact = solve_exact_onehot(&objective.qubo, objective.offset, &objective.layout)?;
        let matched = close(tabu_energy, exact.energy);
        let relative_gap = if matched {
            0.0
        } else {
            (tabu_energy - exact.energy).abs() / exact.energy.abs().max(f64::MIN_POSITIVE)
        };
        let enumeration_agrees =
            (num_vars <= FULL_ENUMERATION_VARS).then(|| close(enumerate_one_hot_minimum(&objective), exact.energy));

        trials.push(TrialOutcome {
            trial,
            t,
            tabu_energy,
            exact_energy: exact.energy,
            relative_gap,
            matched,
            raw_feasible,
            enumeration_agrees,
        });
    }

    Ok(VerifyReport {
        rows: options.rows,
        cols: options.cols,
        num_vars,
        feasible_configurations: 6usize.pow(n as u32),
        trials,
    })
}
