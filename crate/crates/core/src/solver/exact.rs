//! Enumeration oracles.

use std::time::Instant;

use super::{SolverError, SolverResult};
use crate::qubo::{BinaryVector, QuboMatrix, VariableLayout, MODES_PER_INTERSECTION};
use crate::scalar::Scalar;

pub const MAX_EXHAUSTIVE_VARS: usize = 24;
pub const MAX_ONEHOT_INTERSECTIONS: usize = 8;

/// Minimum over all `2^n` vectors, lexicographically smallest on ties
/// (bit 0 most significant).
///
/// Walks a Gray code, updating local fields incrementally; near-ties are
/// settled by exact re-evaluation.
pub fn solve_exhaustive<T: Scalar>(q: &QuboMatrix<T>, offset: T) -> Result<SolverResult<T>, SolverError> {
    let n = q.num_vars();
    if n > MAX_EXHAUSTIVE_VARS {
        return Err(SolverError::TooManyVariables {
            n,
            limit: MAX_EXHAUSTIVE_VARS,
        });
    }
    let start = Instant::now();
    let (linear, adjacency) = q.split_linear_quadratic();
    let mut x = vec![false; n];
    let mut field = linear.clone();
    let mut energy = T::zero();
    let mut best_x = x.clone();
    let mut best = q.evaluate_bits(&best_x);

    let total: u64 = 1 << n;
    for step in 1..total {
        // Gray code flips bit `trailing_zeros(step)`; map it to the last
        // variable so low-index variables change least often.
        let k = n - 1 - step.trailing_zeros() as usize;
        energy = if x[k] { energy - field[k] } else { energy + field[k] };
        x[k] = !x[k];
        for &(m, w) in &adjacency[k] {
            field[m] = if x[k] { field[m] + w } else { field[m] - w };
        }
        if energy <= best || near(energy, best) {
            let exact = q.evaluate_bits(&x);
            if exact < best || (exact == best && x < best_x) {
                best = exact;
                best_x.clone_from(&x);
            }
        }
    }
    Ok(SolverResult {
        x: BinaryVector::from(best_x),
        energy: best + offset,
        iterations_used: total,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn near<T: Scalar>(a: T, b: T) -> bool {
    let (a, b) = (a.to_f64_lossy(), b.to_f64_lossy());
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// Minimum over vectors with exactly one mode per intersection; the
/// lexicographically smallest mode sequence wins ties.
pub fn solve_exact_onehot<T: Scalar>(
    q: &QuboMatrix<T>,
    offset: T,
    layout: &VariableLayout,
) -> Result<SolverResult<T>, SolverError> {
    let count = layout.num_intersections();
    if count > MAX_ONEHOT_INTERSECTIONS {
        return Err(SolverError::TooManyIntersections {
            count,
            limit: MAX_ONEHOT_INTERSECTIONS,
        });
    }
    if layout.num_vars() != q.num_vars() {
        return Err(SolverError::LayoutMismatch {
            layout: layout.num_vars(),
            matrix: q.num_vars(),
        });
    }
    let start = Instant::now();
    let n = q.num_vars();
    let mut dense = vec![T::zero(); n * n];
    for (r, c, w) in q.terms() {
        dense[r * n + c] = w;
    }

    // modes[i] in 0..6 (mode - 1); odometer with the last intersection fastest
    // enumerates mode sequences in lexicographic order.
    let mut modes = vec![0usize; count];
    let mut best_modes = modes.clone();
    let mut best: Option<T> = None;
    let mut evaluated = 0u64;
    loop {
        let vars: Vec<usize> = modes
            .iter()
            .enumerate()
            .map(|(i, &m)| i * MODES_PER_INTERSECTION + m)
            .collect();
        let mut e = T::zero();
        for (a, &va) in vars.iter().enumerate() {
            for &vb in &vars[a..] {
                e = e + dense[va * n + vb];
            }
        }
        evaluated += 1;
        if best.is_none_or(|b| e < b) {
            best = Some(e);
            best_modes.clone_from(&modes);
        }
        let mut i = count;
        loop {
            if i == 0 {
                let mut x = BinaryVector::zeros(n);
                for (i, &m) in best_modes.iter().enumerate() {
                    x.set(i * MODES_PER_INTERSECTION + m, true);
                }
                let energy = q.evaluate(&x).expect("layout matches matrix") + offset;
                return Ok(SolverResult {
                    x,
                    energy,
                    iterations_used: evaluated,
                    wall_time: start.elapsed().as_secs_f64(),
                });
            }
            i -= 1;
            modes[i] += 1;
            if modes[i] < MODES_PER_INTERSECTION {
                break;
            }
            modes[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_matrix() {
        let q = QuboMatrix::<f64>::new(5).unwrap();
        let r = solve_exhaustive(&q, 1.5).unwrap();
        assert_eq!(r.energy, 1.5);
        assert_eq!(r.x, BinaryVector::zeros(5));
    }

    #[test]
    fn negative_coupling() {
        let mut q = QuboMatrix::<f64>::new(2).unwrap();
        q.add_term(0, 1, -3.0).unwrap();
        let r = solve_exhaustive(&q, 1.0).unwrap();
        assert_eq!(r.x, BinaryVector::from_bits([1, 1]));
        assert_eq!(r.energy, -2.0);
    }

    #[test]
    fn lexicographic_tie_break() {
        // x0 and x1 are interchangeable; the minimizer with x0 = 0 comes first.
        let mut q = QuboMatrix::<i64>::new(3).unwrap();
        q.add_term(0, 0, -2).unwrap();
        q.add_term(1, 1, -2).unwrap();
        q.add_term(0, 1, 5).unwrap();
        let r = solve_exhaustive(&q, 0).unwrap();
        assert_eq!(r.x, BinaryVector::from_bits([0, 1, 0]));
    }

    #[test]
    fn size_guards() {
        let q = QuboMatrix::<f64>::new(25).unwrap();
        assert!(matches!(
            solve_exhaustive(&q, 0.0),
            Err(SolverError::TooManyVariables { n: 25, limit: 24 })
        ));
        let layout = VariableLayout::new(9).unwrap();
        let q = layout.empty_qubo::<f64>();
        assert!(matches!(
            solve_exact_onehot(&q, 0.0, &layout),
            Err(SolverError::TooManyIntersections { count: 9, limit: 8 })
        ));
        let small = VariableLayout::new(2).unwrap();
        assert!(matches!(
            solve_exact_onehot(&q, 0.0, &small),
            Err(SolverError::LayoutMismatch { .. })
        ));
    }

    #[test]
    fn onehot_counts_and_ties() {
        let layout = VariableLayout::new(4).unwrap();
        let q = layout.empty_qubo::<f64>();
        let r = solve_exact_onehot(&q, 0.0, &layout).unwrap();
        assert_eq!(r.iterations_used, 1296);
        assert_eq!(r.x, layout.encode_modes(&[1, 1, 1, 1]).unwrap());
    }
}
