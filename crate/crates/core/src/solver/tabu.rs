//! Single-flip tabu search with incremental flip gains.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SolverResult;
use crate::qubo::{BinaryVector, QuboMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TabuParams {
    /// Moves a flipped variable stays tabu.
    pub tenure: usize,
    /// Moves per restart.
    pub max_sweeps: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for TabuParams {
    fn default() -> Self {
        Self {
            tenure: 20,
            max_sweeps: 500,
            restarts: 10,
            seed: 0,
        }
    }
}

/// Minimizes `x^T Q x + offset`.
///
/// Restart 0 starts from all zeros, later restarts from random vectors drawn
/// from seeds derived from `params.seed`. Each move flips the admissible
/// variable with the lowest energy delta, worsening moves included; a tabu
/// variable is admissible only if flipping it beats the best energy seen.
pub fn solve_tabu<T: Scalar>(q: &QuboMatrix<T>, offset: T, params: &TabuParams) -> SolverResult<T> {
    solve_tabu_traced(q, offset, params, |_, _| {})
}

/// [`solve_tabu`] reporting `(restart, best energy so far)` after every move.
pub fn solve_tabu_traced<T: Scalar>(
    q: &QuboMatrix<T>,
    offset: T,
    params: &TabuParams,
    mut trace: impl FnMut(usize, T),
) -> SolverResult<T> {
    let start = Instant::now();
    let n = q.num_vars();
    let (linear, adjacency) = q.split_linear_quadratic();
    let tenure = params.tenure.max(1);

    let mut best: Option<(T, Vec<bool>)> = None;
    let mut iterations = 0u64;
    for restart in 0..params.restarts.max(1) {
        let init = if restart == 0 {
            vec![false; n]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, restart as u64));
            (0..n).map(|_| rng.gen_bool(0.5)).collect()
        };
        let mut run = Walk::new(q, &linear, &adjacency, init);
        let mut run_best = run.energy;
        let mut run_best_x = run.x.clone();
        let mut tabu_until = vec![0usize; n];
        for step in 1..=params.max_sweeps {
            let Some(k) = run.pick_move(&tabu_until, step, run_best) else {
                break;
            };
            run.flip(k, &adjacency);
            tabu_until[k] = step + tenure;
            iterations += 1;
            if run.energy < run_best {
                run_best = run.energy;
                run_best_x.clone_from(&run.x);
            }
            trace(restart, run_best);
        }
        // exact re-evaluation decides between restarts; earlier restart wins ties
        let exact = q.evaluate_bits(&run_best_x);
        if best.as_ref().is_none_or(|(e, _)| exact < *e) {
            best = Some((exact, run_best_x));
        }
    }
    let (energy, bits) = best.expect("at least one restart");
    SolverResult {
        x: BinaryVector::from(bits),
        energy: energy + offset,
        iterations_used: iterations,
        wall_time: start.elapsed().as_secs_f64(),
    }
}

pub fn derive_seed(seed: u64, restart: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ restart.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Walk<T> {
    x: Vec<bool>,
    /// `field[k]`: energy change from setting `x[k]` to 1 given the others.
    field: Vec<T>,
    energy: T,
}

impl<T: Scalar> Walk<T> {
    fn new(q: &QuboMatrix<T>, linear: &[T], adjacency: &[Vec<(usize, T)>], x: Vec<bool>) -> Self {
        let field = (0..x.len())
            .map(|k| {
                adjacency[k]
                    .iter()
                    .filter(|(m, _)| x[*m])
                    .fold(linear[k], |acc, &(_, w)| acc + w)
            })
            .collect();
        let energy = q.evaluate_bits(&x);
        Self { x, field, energy }
    }

    #[inline]
    fn delta(&self, k: usize) -> T {
        if self.x[k] {
            -self.field[k]
        } else {
            self.field[k]
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn pick_move(&self, tabu_until: &[usize], step: usize, best: T) -> Option<usize> {
        let mut choice: Option<(usize, T)> = None;
        for k in 0..self.x.len() {
            let d = self.delta(k);
            let admissible = tabu_until[k] < step || self.energy + d < best;
            if admissible && choice.is_none_or(|(_, cd)| d < cd) {
                choice = Some((k, d));
            }
        }
        choice.map(|(k, _)| k)
    }

    fn flip(&mut self, k: usize, adjacency: &[Vec<(usize, T)>]) {
        self.energy = self.energy + self.delta(k);
        self.x[k] = !self.x[k];
        let on = self.x[k];
        for &(m, w) in &adjacency[k] {
            self.field[m] = if on { self.field[m] + w } else { self.field[m] - w };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_variable_optimum() {
        let mut q = QuboMatrix::<f64>::new(1).unwrap();
        q.add_term(0, 0, -5.0).unwrap();
        let r = solve_tabu(&q, 2.0, &TabuParams::default());
        assert_eq!(r.x, BinaryVector::from_bits([1]));
        assert_eq!(r.energy, -3.0);
    }

    #[test]
    fn positive_diagonal_gives_zero_vector() {
        let mut q = QuboMatrix::<i64>::new(8).unwrap();
        for i in 0..8 {
            q.add_term(i, i, i as i64 + 1).unwrap();
        }
        let r = solve_tabu(&q, 0, &TabuParams::default());
        assert_eq!(r.x, BinaryVector::zeros(8));
        assert_eq!(r.energy, 0);
    }

    #[test]
    fn accepts_worsening_moves_to_escape() {
        // From zero, every single flip costs +1, yet x = [1, 1] has energy -8.
        let mut q = QuboMatrix::<i64>::new(2).unwrap();
        q.add_term(0, 0, 1).unwrap();
        q.add_term(1, 1, 1).unwrap();
        q.add_term(0, 1, -10).unwrap();
        let params = TabuParams {
            restarts: 1,
            ..Default::default()
        };
        let r = solve_tabu(&q, 0, &params);
        assert_eq!(r.energy, -8);
    }

    #[test]
    fn reproducible_and_best_non_increasing() {
        let mut q = QuboMatrix::<f64>::new(30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..120 {
            let (r, c) = (rng.gen_range(0..30), rng.gen_range(0..30));
            q.add_term(r, c, rng.gen_range(-50..=50) as f64).unwrap();
        }
        let params = TabuParams {
            seed: 42,
            ..Default::default()
        };
        let a = solve_tabu(&q, 0.0, &params);
        let b = solve_tabu(&q, 0.0, &params);
        assert_eq!((a.x.clone(), a.energy, a.iterations_used), (b.x, b.energy, b.iterations_used));
        assert_eq!(a.energy, q.evaluate(&a.x).unwrap());

        let mut last: Option<(usize, f64)> = None;
        solve_tabu_traced(&q, 0.0, &params, |restart, best| {
            if let Some((r, prev)) = last {
                if r == restart {
                    assert!(best <= prev);
                }
            }
            last = Some((restart, best));
        });
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(0, 1), derive_seed(0, 2));
        assert_ne!(derive_seed(1, 1), derive_seed(2, 1));
    }
}
