//! Traffic-signal control on a grid road network posed as a sequence of
//! QUBO instances.
//!
//! Each intersection picks one of six signal modes. Queue lengths measured
//! in a deterministic microsimulation set the clearance reward of every
//! mode; a green-wave term couples upstream outflow with downstream modes
//! when the travel time along a road lines up with the current time; a
//! quadratic penalty keeps exactly one mode per intersection. The resulting
//! QUBO is minimized by tabu search and the chosen modes are fed back into
//! the simulation.
//!
//! The matrix and solvers are generic over [`Scalar`], the cost builders
//! over [`Real`]. Aliases below fix the common choices.

pub mod cost;
pub mod experiment;
pub mod grid;
pub mod metrics;
pub mod modes;
pub mod qubo;
pub mod scalar;
pub mod sim;
pub mod solver;

pub use cost::{build_objective, ClearanceTable, LambdaParams, Objective, QueueSnapshot};
pub use grid::{Direction, GridMap, Road, RoadId};
pub use metrics::{report_comparison, time_wasted_step, ComparisonReport, MetricLedger};
pub use modes::ModeAssignment;
pub use qubo::{BinaryVector, QuboError, QuboMatrix, VariableLayout};
pub use scalar::{Real, Scalar};
pub use sim::{SimParams, SimState};
pub use solver::{solve_exact_onehot, solve_exhaustive, solve_tabu, Solver, SolverResult, TabuParams};

/// Double-precision QUBO, used by the control loop.
pub type Qubo = QuboMatrix<f64>;
pub type QuboF32 = QuboMatrix<f32>;
/// Integer QUBO for exact arithmetic in tests and benchmarks.
pub type QuboI64 = QuboMatrix<i64>;
pub type Clearance = ClearanceTable<f64>;
pub type Objective64 = Objective<f64>;
pub type SolverResult64 = SolverResult<f64>;
