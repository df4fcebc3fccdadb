//! QUBO minimizers: tabu search, exhaustive oracles, and one-hot repair.

mod exact;
mod repair;
mod tabu;

pub use exact::{solve_exact_onehot, solve_exhaustive, MAX_EXHAUSTIVE_VARS, MAX_ONEHOT_INTERSECTIONS};
pub use repair::{repair, Repaired};
pub use tabu::{derive_seed, solve_tabu, solve_tabu_traced, TabuParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qubo::{BinaryVector, QuboMatrix, VariableLayout};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("{n} variables exceed the exhaustive limit of {limit}")]
    TooManyVariables { n: usize, limit: usize },
    #[error("{count} intersections exceed the one-hot enumeration limit of {limit}")]
    TooManyIntersections { count: usize, limit: usize },
    #[error("layout has {layout} variables but the matrix has {matrix}")]
    LayoutMismatch { layout: usize, matrix: usize },
    #[error("unknown solver `{0}` (available: tabu, exact)")]
    UnknownSolver(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult<T> {
    pub x: BinaryVector,
    /// `x^T Q x + offset`, recomputed from `x`.
    pub energy: T,
    pub iterations_used: u64,
    pub wall_time: f64,
}

/// A QUBO backend. Local backends are deterministic for a given seed.
pub trait Solver<T: Scalar>: Send + Sync {
    fn name(&self) -> &'static str;

    fn solve(&self, q: &QuboMatrix<T>, offset: T, seed: u64) -> Result<SolverResult<T>, SolverError>;
}

#[derive(Debug, Clone)]
pub struct TabuSolver {
    pub params: TabuParams,
}

impl<T: Scalar> Solver<T> for TabuSolver {
    fn name(&self) -> &'static str {
        "tabu"
    }

    fn solve(&self, q: &QuboMatrix<T>, offset: T, seed: u64) -> Result<SolverResult<T>, SolverError> {
        Ok(solve_tabu(q, offset, &TabuParams { seed, ..self.params }))
    }
}

#[derive(Debug, Clone)]
pub struct ExactOneHotSolver {
    pub layout: VariableLayout,
}

impl<T: Scalar> Solver<T> for ExactOneHotSolver {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn solve(&self, q: &QuboMatrix<T>, offset: T, _seed: u64) -> Result<SolverResult<T>, SolverError> {
        solve_exact_onehot(q, offset, &self.layout)
    }
}

/// Solver selection as written in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub name: String,
    pub tabu: TabuParams,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            name: "tabu".to_string(),
            tabu: TabuParams::default(),
        }
    }
}

/// Looks a backend up by name. `exact` checks its size guard up front.
pub fn solver_by_name<T: Scalar>(
    config: &SolverConfig,
    layout: VariableLayout,
) -> Result<Box<dyn Solver<T>>, SolverError> {
    match config.name.as_str() {
        "tabu" => Ok(Box::new(TabuSolver {
            params: config.tabu,
        })),
        "exact" => {
            if layout.num_intersections() > MAX_ONEHOT_INTERSECTIONS {
                return Err(SolverError::TooManyIntersections {
                    count: layout.num_intersections(),
                    limit: MAX_ONEHOT_INTERSECTIONS,
                });
            }
            Ok(Box::new(ExactOneHotSolver { layout }))
        }
        other => Err(SolverError::UnknownSolver(other.to_string())),
    }
}
