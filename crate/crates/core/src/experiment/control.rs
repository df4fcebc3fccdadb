use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, ExperimentError};
use crate::cost::{build_objective, QueueSnapshot};
use crate::grid::GridMap;
use crate::metrics::{time_wasted_step, MetricLedger};
use crate::modes::NUM_LANES;
use crate::qubo::VariableLayout;
use crate::sim::{fixed_cycle_assignment, SimState, StepOutcome};
use crate::solver::{repair, solver_by_name};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Controller {
    /// Full objective.
    Coordinated,
    /// Objective with the coordination weight forced to zero.
    NoCoordination,
    /// Timer-driven rotation through the six modes.
    FixedCycle,
}

impl Controller {
    pub const ALL: [Controller; 3] = [
        Controller::Coordinated,
        Controller::NoCoordination,
        Controller::FixedCycle,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Controller::Coordinated => "coordinated",
            Controller::NoCoordination => "no_coordination",
            Controller::FixedCycle => "fixed_cycle",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.label() == name)
    }
}

/// One QUBO solve inside a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveRecord {
    pub solve_index: usize,
    pub t: f64,
    pub wall_seconds: f64,
    pub energy: f64,
    /// Raw solver output had exactly one mode per intersection.
    pub raw_feasible: bool,
    pub repaired_intersections: usize,
    pub assignment: Vec<u8>,
    /// Roads whose green-wave gate was open for this instance.
    pub sync_active: usize,
    /// Queues the instance was built from.
    pub snapshot: QueueSnapshot,
}

impl SolveRecord {
    pub fn repaired(&self) -> bool {
        self.repaired_intersections > 0
    }
}

/// Signal and queue state of one intersection at the start of an iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateRow {
    pub t: f64,
    pub intersection: usize,
    pub mode: u8,
    pub queues: [u32; NUM_LANES],
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub controller: Controller,
    pub ledger: MetricLedger,
    pub solves: Vec<SolveRecord>,
    pub steps: Vec<StepOutcome>,
    pub initial_cars: usize,
    pub state_rows: Vec<StateRow>,
}

impl RunOutcome {
    pub fn cars_exited(&self) -> usize {
        self.steps.iter().map(|s| s.cars_exited).sum()
    }

    pub fn cars_remaining(&self) -> usize {
        self.steps.last().map_or(self.initial_cars, |s| s.cars_after)
    }
}

fn solve_seed(base: u64, solve_index: usize) -> u64 {
    base.wrapping_add(solve_index as u64)
}

/// Runs the measure / build / solve / apply / move loop for `controller`.
///
/// Solving controllers re-plan every `resolve_every` iterations starting at
/// iteration 0; the fixed cycle re-reads its timer every iteration. Wasted
/// time is accumulated after every step.
pub fn run_loop(
    map: &GridMap,
    controller: Controller,
    config: &ExperimentConfig,
) -> Result<RunOutcome, ExperimentError> {
    config.validate()?;
    let sched = &config.schedule;
    let n = map.num_intersections();
    let layout = VariableLayout::new(n).expect("grid is nonempty");
    let lambdas = match controller {
        Controller::NoCoordination => config.lambdas.without_coordination(),
        _ => config.lambdas,
    };
    let solver = match controller {
        Controller::FixedCycle => None,
        _ => Some(solver_by_name::<f64>(&config.solver, layout)?),
    };

    let mut sim = SimState::new(map.clone(), config.traffic.n_cars, config.sim_params(), config.traffic.sim_seed)?;
    let initial_cars = sim.car_count();
    let mut ledger = MetricLedger::new(controller.label());
    let mut solves = Vec::new();
    let mut steps = Vec::with_capacity(sched.total_iterations);
    let mut state_rows = Vec::new();

    for iteration in 0..sched.total_iterations {
        let t = sim.time();
        match &solver {
            None => sim.apply(fixed_cycle_assignment(t, sched.fixed_cycle_period_s, n))?,
            Some(solver) if iteration % sched.resolve_every == 0 => {
                let snapshot = sim.measure_queues();
                let objective = build_objective::<f64>(&snapshot, map, t, &lambdas, sched.tau_tolerance_s)?;
                let solve_index = solves.len();
                let result = solver.solve(
                    &objective.qubo,
                    objective.offset,
                    solve_seed(config.solver.tabu.seed, solve_index),
                )?;
                let repaired = repair(&result.x, &layout, &objective.clearance);
                solves.push(SolveRecord {
                    solve_index,
                    t,
                    wall_seconds: result.wall_time,
                    energy: result.energy,
                    raw_feasible: layout.is_one_hot(&result.x),
                    repaired_intersections: repaired.repaired_intersections,
                    assignment: repaired.assignment.as_slice().to_vec(),
                    sync_active: objective.sync.active_count(),
                    snapshot,
                });
                sim.apply(repaired.assignment)?;
            }
            Some(_) => {}
        }

        if config.outputs.state_dump {
            let snapshot = sim.measure_queues();
            if let crate::sim::SignalPlan::Modes(assignment) = sim.signals() {
                for i in 0..n {
                    state_rows.push(StateRow {
                        t,
                        intersection: i,
                        mode: assignment.mode(i) as u8,
                        queues: snapshot.counts[i],
                    });
                }
            }
        }

        let outcome = sim.step(sched.step_dt_s);
        if outcome.cars_before != outcome.cars_after + outcome.cars_exited {
            return Err(ExperimentError::Conservation {
                t: sim.time(),
                before: outcome.cars_before,
                after: outcome.cars_after,
                exited: outcome.cars_exited,
            });
        }
        steps.push(outcome);
        ledger.record(sim.time(), time_wasted_step(&sim, sched.step_dt_s));
    }

    Ok(RunOutcome {
        controller,
        ledger,
        solves,
        steps,
        initial_cars,
        state_rows,
    })
}
