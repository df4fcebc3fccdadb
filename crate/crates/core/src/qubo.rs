//! Sparse upper-triangular QUBO matrices and the (intersection, mode) variable layout.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::AddAssign;

use thiserror::Error;

use crate::scalar::Scalar;

/// Signal modes per intersection.
pub const MODES_PER_INTERSECTION: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuboError {
    #[error("a QUBO needs at least one variable")]
    Empty,
    #[error("index ({r}, {c}) out of range for {n} variables")]
    IndexOutOfRange { r: usize, c: usize, n: usize },
    #[error("vector has {got} entries, matrix has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error("intersection {intersection} out of range for {count} intersections")]
    IntersectionOutOfRange { intersection: usize, count: usize },
    #[error("mode {0} out of range 1..=6")]
    ModeOutOfRange(usize),
    #[error("variable index {index} out of range for {n} variables")]
    VariableOutOfRange { index: usize, n: usize },
}

/// Minimization target `x^T Q x` over binary `x`, stored upper-triangular.
///
/// Keys are canonical `(r, c)` with `r <= c`; absent keys are exactly zero.
/// Diagonal entries are linear terms since `x * x = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboMatrix<T> {
    n: usize,
    terms: BTreeMap<(usize, usize), T>,
}

impl<T: Scalar> QuboMatrix<T> {
    pub fn new(n: usize) -> Result<Self, QuboError> {
        if n == 0 {
            return Err(QuboError::Empty);
        }
        Ok(Self {
            n,
            terms: BTreeMap::new(),
        })
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.n
    }

    /// Number of stored (nonzero) coefficients.
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Accumulates `w` onto the canonical key of `(r, c)`.
    ///
    /// Entries that cancel to exactly zero are dropped so that adding and then
    /// subtracting the same weight restores the original matrix.
    pub fn add_term(&mut self, r: usize, c: usize, w: T) -> Result<(), QuboError> {
        if r >= self.n || c >= self.n {
            return Err(QuboError::IndexOutOfRange { r, c, n: self.n });
        }
        if w.is_zero() {
            return Ok(());
        }
        let key = (r.min(c), r.max(c));
        let entry = self.terms.entry(key).or_insert_with(T::zero);
        *entry = *entry + w;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
        Ok(())
    }

    /// Coefficient at `(r, c)` in canonical form; zero when absent or out of range.
    pub fn get(&self, r: usize, c: usize) -> T {
        self.terms
            .get(&(r.min(c), r.max(c)))
            .copied()
            .unwrap_or_else(T::zero)
    }

    /// Stored terms in ascending canonical key order.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.terms.iter().map(|(&(r, c), &w)| (r, c, w))
    }

    /// `Σ_{r≤c} w_rc x_r x_c`.
    pub fn evaluate(&self, x: &BinaryVector) -> Result<T, QuboError> {
        if x.len() != self.n {
            return Err(QuboError::LengthMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self.evaluate_bits(x.as_slice()))
    }

    pub(crate) fn evaluate_bits(&self, bits: &[bool]) -> T {
        self.terms
            .iter()
            .filter(|(&(r, c), _)| bits[r] && bits[c])
            .map(|(_, &w)| w)
            .sum()
    }

    /// Diagonal coefficients and symmetric off-diagonal adjacency lists.
    pub fn split_linear_quadratic(&self) -> (Vec<T>, Vec<Vec<(usize, T)>>) {
        let mut linear = vec![T::zero(); self.n];
        let mut adjacency = vec![Vec::new(); self.n];
        for (&(r, c), &w) in &self.terms {
            if r == c {
                linear[r] = w;
            } else {
                adjacency[r].push((c, w));
                adjacency[c].push((r, w));
            }
        }
        (linear, adjacency)
    }

    /// One `r c w` line per stored term, ascending key order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (&(r, c), w) in &self.terms {
            let _ = writeln!(out, "{r} {c} {w}");
        }
        out
    }
}

impl<T: Scalar> AddAssign<&QuboMatrix<T>> for QuboMatrix<T> {
    /// Element-wise sum. Panics on dimension mismatch.
    fn add_assign(&mut self, rhs: &QuboMatrix<T>) {
        assert_eq!(self.n, rhs.n, "QUBO dimension mismatch");
        for (&(r, c), &w) in &rhs.terms {
            self.add_term(r, c, w).expect("keys of a same-size matrix are in range");
        }
    }
}

/// Assignment of the binary variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryVector(Vec<bool>);

impl BinaryVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    /// Bits from 0/1 integers; anything nonzero is a 1.
    pub fn from_bits<I: IntoIterator<Item = u8>>(bits: I) -> Self {
        Self(bits.into_iter().map(|b| b != 0).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

impl From<Vec<bool>> for BinaryVector {
    fn from(bits: Vec<bool>) -> Self {
        Self(bits)
    }
}

/// Fixed mapping between `(intersection, mode)` and variable indices:
/// `index = 6 * intersection + (mode - 1)`, modes numbered 1..=6.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariableLayout {
    num_intersections: usize,
}

impl VariableLayout {
    pub fn new(num_intersections: usize) -> Result<Self, QuboError> {
        if num_intersections == 0 {
            return Err(QuboError::Empty);
        }
        Ok(Self { num_intersections })
    }

    pub fn num_intersections(&self) -> usize {
        self.num_intersections
    }

    pub fn num_vars(&self) -> usize {
        self.num_intersections * MODES_PER_INTERSECTION
    }

    pub fn var_index(&self, intersection: usize, mode: usize) -> Result<usize, QuboError> {
        if intersection >= self.num_intersections {
            return Err(QuboError::IntersectionOutOfRange {
                intersection,
                count: self.num_intersections,
            });
        }
        if !(1..=MODES_PER_INTERSECTION).contains(&mode) {
            return Err(QuboError::ModeOutOfRange(mode));
        }
        Ok(self.index_unchecked(intersection, mode))
    }

    #[inline]
    pub(crate) fn index_unchecked(&self, intersection: usize, mode: usize) -> usize {
        MODES_PER_INTERSECTION * intersection + (mode - 1)
    }

    /// Inverse of [`var_index`](Self::var_index).
    pub fn decode(&self, index: usize) -> Result<(usize, usize), QuboError> {
        if index >= self.num_vars() {
            return Err(QuboError::VariableOutOfRange {
                index,
                n: self.num_vars(),
            });
        }
        Ok((
            index / MODES_PER_INTERSECTION,
            index % MODES_PER_INTERSECTION + 1,
        ))
    }

    pub fn empty_qubo<T: Scalar>(&self) -> QuboMatrix<T> {
        QuboMatrix::new(self.num_vars()).expect("layout has at least one variable")
    }

    /// Modes set at `intersection` in `x`, ascending.
    pub fn modes_set(&self, x: &BinaryVector, intersection: usize) -> Vec<usize> {
        (1..=MODES_PER_INTERSECTION)
            .filter(|&m| x.get(self.index_unchecked(intersection, m)))
            .collect()
    }

    /// True when every intersection has exactly one mode set.
    pub fn is_one_hot(&self, x: &BinaryVector) -> bool {
        x.len() == self.num_vars()
            && (0..self.num_intersections).all(|i| self.modes_set(x, i).len() == 1)
    }

    /// One-hot vector selecting `modes[i]` at each intersection.
    pub fn encode_modes(&self, modes: &[u8]) -> Result<BinaryVector, QuboError> {
        if modes.len() != self.num_intersections {
            return Err(QuboError::LengthMismatch {
                expected: self.num_intersections,
                got: modes.len(),
            });
        }
        let mut x = BinaryVector::zeros(self.num_vars());
        for (i, &m) in modes.iter().enumerate() {
            x.set(self.var_index(i, m as usize)?, true);
        }
        Ok(x)
    }
}
