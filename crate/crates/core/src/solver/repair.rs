use crate::cost::ClearanceTable;
use crate::modes::ModeAssignment;
use crate::qubo::{BinaryVector, VariableLayout};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Repaired {
    pub assignment: ModeAssignment,
    /// Intersections that did not have exactly one mode set.
    pub repaired_intersections: usize,
}

impl Repaired {
    pub fn was_repaired(&self) -> bool {
        self.repaired_intersections > 0
    }
}

/// Decodes `x` into one mode per intersection.
///
/// A single set mode is kept. With several set, the one with the largest
/// clearance survives; with none, the largest-clearance mode overall is used.
/// Lower mode numbers win ties.
pub fn repair<T: Real>(x: &BinaryVector, layout: &VariableLayout, clearance: &ClearanceTable<T>) -> Repaired {
    assert_eq!(x.len(), layout.num_vars(), "vector does not match layout");
    let mut repaired_intersections = 0;
    let modes = (0..layout.num_intersections())
        .map(|i| {
            let set = layout.modes_set(x, i);
            let mode = match set.as_slice() {
                [only] => *only,
                [] => {
                    repaired_intersections += 1;
                    clearance.best_mode(i)
                }
                several => {
                    repaired_intersections += 1;
                    let mut best = several[0];
                    for &m in &several[1..] {
                        if clearance.get(i, m) > clearance.get(i, best) {
                            best = m;
                        }
                    }
                    best
                }
            };
            mode as u8
        })
        .collect();
    Repaired {
        assignment: ModeAssignment::new(modes),
        repaired_intersections,
    }
}
