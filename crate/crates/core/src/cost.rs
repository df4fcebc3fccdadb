//! Objective assembly: clearance reward, green-wave coordination and the
//! one-mode-per-intersection penalty.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Direction, GridMap, RoadId};
use crate::modes::{self, NUM_LANES, NUM_MODES};
use crate::qubo::{QuboMatrix, VariableLayout};
use crate::scalar::{real, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("lambda {name} = {value} must be finite and non-negative")]
    BadLambda { name: &'static str, value: f64 },
    #[error("lambda4 must be positive for the one-hot penalty to bind")]
    PenaltyNotBinding,
    #[error("tau tolerance {0} s must be positive")]
    BadTolerance(f64),
    #[error("elapsed time {0} s must be finite and non-negative")]
    BadTime(f64),
    #[error("snapshot covers {got} intersections, map has {expected}")]
    SnapshotSize { expected: usize, got: usize },
    #[error("straight fraction {value} at intersection {intersection} lane {lane} outside [0, 1]")]
    BadFraction {
        intersection: usize,
        lane: usize,
        value: f64,
    },
}

/// Weights of the objective terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LambdaParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda3_prime: f64,
    pub lambda4: f64,
}

impl Default for LambdaParams {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 60.0,
            lambda3: 0.3,
            lambda3_prime: 0.7,
            lambda4: 60.0,
        }
    }
}

impl LambdaParams {
    pub fn validate(&self) -> Result<(), CostError> {
        for (name, value) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
            ("lambda3_prime", self.lambda3_prime),
            ("lambda4", self.lambda4),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(CostError::BadLambda { name, value });
            }
        }
        if self.lambda4 <= 0.0 {
            return Err(CostError::PenaltyNotBinding);
        }
        Ok(())
    }

    /// Same weights with the coordination term switched off.
    pub fn without_coordination(self) -> Self {
        Self {
            lambda2: 0.0,
            ..self
        }
    }
}

/// Queued cars per incoming lane (`counts[i][k-1]`) and the fraction of them
/// going straight (`straight[i][k-1]`). Left-turners are never counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueSnapshot {
    pub counts: Vec<[u32; NUM_LANES]>,
    pub straight: Vec<[f64; NUM_LANES]>,
}

impl QueueSnapshot {
    /// Snapshot with the same straight fraction on every lane.
    pub fn uniform(counts: Vec<[u32; NUM_LANES]>, straight_fraction: f64) -> Self {
        let straight = vec![[straight_fraction; NUM_LANES]; counts.len()];
        Self { counts, straight }
    }

    pub fn num_intersections(&self) -> usize {
        self.counts.len()
    }

    pub fn validate(&self) -> Result<(), CostError> {
        if self.straight.len() != self.counts.len() {
            return Err(CostError::SnapshotSize {
                expected: self.counts.len(),
                got: self.straight.len(),
            });
        }
        for (i, lanes) in self.straight.iter().enumerate() {
            for (k, &value) in lanes.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    return Err(CostError::BadFraction {
                        intersection: i,
                        lane: k + 1,
                        value,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Cars released by each mode at each intersection.
#[derive(Debug, Clone, PartialEq)]
pub struct ClearanceTable<T> {
    values: Vec<[T; NUM_MODES]>,
}

impl<T: Real> ClearanceTable<T> {
    pub fn num_intersections(&self) -> usize {
        self.values.len()
    }

    /// `C_ij` for `mode` in 1..=6.
    pub fn get(&self, intersection: usize, mode: usize) -> T {
        self.values[intersection][mode - 1]
    }

    pub fn row(&self, intersection: usize) -> &[T; NUM_MODES] {
        &self.values[intersection]
    }

    pub fn from_rows(values: Vec<[T; NUM_MODES]>) -> Self {
        Self { values }
    }

    /// Lowest-numbered mode with the largest clearance at `intersection`.
    pub fn best_mode(&self, intersection: usize) -> usize {
        let row = &self.values[intersection];
        let mut best = 0;
        for (j, &c) in row.iter().enumerate().skip(1) {
            if c > row[best] {
                best = j;
            }
        }
        best + 1
    }
}

pub fn compute_clearance<T: Real>(snapshot: &QueueSnapshot) -> ClearanceTable<T> {
    let values = snapshot
        .counts
        .iter()
        .zip(&snapshot.straight)
        .map(|(a, f)| {
            let a = a.map(|v| real::<T>(v as f64));
            let f = f.map(real::<T>);
            [
                f[0] * a[0] + f[1] * a[1],
                a[1],
                a[0],
                f[2] * a[2] + f[3] * a[3],
                a[3],
                a[2],
            ]
        })
        .collect();
    ClearanceTable { values }
}

/// Green-wave gates, one per directed road.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncFlags(Vec<bool>);

impl SyncFlags {
    pub fn get(&self, road: RoadId) -> bool {
        self.0[road]
    }

    pub fn active_count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn from_flags(flags: Vec<bool>) -> Self {
        Self(flags)
    }
}

/// Whether elapsed time `t` lines up with a road's travel time `dt`.
///
/// Before the first traversal completes the gate opens when `dt - t` is
/// within tolerance; afterwards when `t` is within tolerance of a multiple
/// of `dt`, measured both ways round.
pub fn sync_flag(dt: f64, t: f64, tolerance: f64) -> bool {
    if t < dt {
        (dt - t).abs() <= tolerance
    } else {
        let phase = t % dt;
        phase <= tolerance || dt - phase <= tolerance
    }
}

pub fn compute_sync_flags(
    travel_times: &[f64],
    t: f64,
    tolerance: f64,
) -> Result<SyncFlags, CostError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(CostError::BadTime(t));
    }
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(CostError::BadTolerance(tolerance));
    }
    Ok(SyncFlags(
        travel_times.iter().map(|&dt| sync_flag(dt, t, tolerance)).collect(),
    ))
}

/// Which `λ3` weight a coordination term carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightClass {
    /// Receiving straight-only mode (`lambda3`).
    Straight,
    /// Receiving straight-and-right mode (`lambda3_prime`).
    StraightRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoordinationTarget {
    pub neighbor: usize,
    pub mode: usize,
    pub weight: WeightClass,
    /// Road from the source intersection to `neighbor`.
    pub road: RoadId,
}

/// Downstream modes that continue the straight flow released by `mode` at `i`.
///
/// Each straight outflow that stays on the grid yields two targets at the
/// receiving intersection: its straight-only mode and the straight-and-right
/// mode of the lane the flow arrives on.
pub fn coordination_targets(map: &GridMap, i: usize, mode: usize) -> Vec<CoordinationTarget> {
    let mut targets = Vec::with_capacity(4);
    for &lane in modes::straight_lanes(mode) {
        let heading = Direction::of_lane(lane).expect("lanes are 1..=4");
        let Some(neighbor) = map.neighbor(i, heading) else {
            continue;
        };
        let road = map
            .road_between(i, neighbor)
            .expect("adjacent intersections share a road")
            .id;
        let arrival = heading.arrival_lane();
        targets.push(CoordinationTarget {
            neighbor,
            mode: modes::straight_mode_for_lane(arrival),
            weight: WeightClass::Straight,
            road,
        });
        targets.push(CoordinationTarget {
            neighbor,
            mode: modes::straight_right_mode_for_lane(arrival),
            weight: WeightClass::StraightRight,
            road,
        });
    }
    targets
}

/// Adds `-λ1 C_ij` on each variable's diagonal.
pub fn add_clearance_term<T: Real>(
    q: &mut QuboMatrix<T>,
    layout: &VariableLayout,
    clearance: &ClearanceTable<T>,
    lambda1: f64,
) {
    let l1 = real::<T>(lambda1);
    for i in 0..layout.num_intersections() {
        for mode in 1..=NUM_MODES {
            let idx = layout.index_unchecked(i, mode);
            q.add_term(idx, idx, -l1 * clearance.get(i, mode))
                .expect("layout index in range");
        }
    }
}

/// Couples each mode with the downstream modes it feeds while the road's
/// green-wave gate is open.
#[allow(clippy::too_many_arguments)]
pub fn add_coordination_term<T: Real>(
    q: &mut QuboMatrix<T>,
    layout: &VariableLayout,
    map: &GridMap,
    clearance: &ClearanceTable<T>,
    flags: &SyncFlags,
    lambda2: f64,
    lambda3: f64,
    lambda3_prime: f64,
) {
    if lambda2 == 0.0 {
        return;
    }
    let l2 = real::<T>(lambda2);
    let (l3, l3p) = (real::<T>(lambda3), real::<T>(lambda3_prime));
    for i in 0..layout.num_intersections() {
        for mode in 1..=NUM_MODES {
            let c_src = clearance.get(i, mode);
            if c_src.is_zero() {
                continue;
            }
            for target in coordination_targets(map, i, mode) {
                if !flags.get(target.road) {
                    continue;
                }
                let weight = match target.weight {
                    WeightClass::Straight => l3,
                    WeightClass::StraightRight => l3p,
                };
                let w = -l2 * c_src * weight * clearance.get(target.neighbor, target.mode);
                q.add_term(
                    layout.index_unchecked(i, mode),
                    layout.index_unchecked(target.neighbor, target.mode),
                    w,
                )
                .expect("layout index in range");
            }
        }
    }
}

/// Expands `λ4 Σ_i (1 - Σ_j x_ij)^2`; returns the constant `λ4 · n` left over.
pub fn add_one_hot_penalty<T: Real>(
    q: &mut QuboMatrix<T>,
    layout: &VariableLayout,
    lambda4: f64,
) -> T {
    let l4 = real::<T>(lambda4);
    let two = l4 + l4;
    for i in 0..layout.num_intersections() {
        for a in 1..=NUM_MODES {
            let ia = layout.index_unchecked(i, a);
            q.add_term(ia, ia, -l4).expect("layout index in range");
            for b in a + 1..=NUM_MODES {
                q.add_term(ia, layout.index_unchecked(i, b), two)
                    .expect("layout index in range");
            }
        }
    }
    l4 * real::<T>(layout.num_intersections() as f64)
}

/// A built instance: `x^T Q x + offset` is the full objective.
#[derive(Debug, Clone)]
pub struct Objective<T> {
    pub qubo: QuboMatrix<T>,
    pub offset: T,
    pub layout: VariableLayout,
    pub clearance: ClearanceTable<T>,
    pub sync: SyncFlags,
}

pub fn build_objective<T: Real>(
    snapshot: &QueueSnapshot,
    map: &GridMap,
    t: f64,
    lambdas: &LambdaParams,
    tolerance: f64,
) -> Result<Objective<T>, CostError> {
    lambdas.validate()?;
    snapshot.validate()?;
    if snapshot.num_intersections() != map.num_intersections() {
        return Err(CostError::SnapshotSize {
            expected: map.num_intersections(),
            got: snapshot.num_intersections(),
        });
    }
    let layout = VariableLayout::new(map.num_intersections()).expect("grid is nonempty");
    let clearance = compute_clearance::<T>(snapshot);
    let sync = compute_sync_flags(&map.travel_times(), t, tolerance)?;

    let mut qubo = layout.empty_qubo();
    add_clearance_term(&mut qubo, &layout, &clearance, lambdas.lambda1);
    add_coordination_term(
        &mut qubo,
        &layout,
        map,
        &clearance,
        &sync,
        lambdas.lambda2,
        lambdas.lambda3,
        lambdas.lambda3_prime,
    );
    let offset = add_one_hot_penalty(&mut qubo, &layout, lambdas.lambda4);
    Ok(Objective {
        qubo,
        offset,
        layout,
        clearance,
        sync,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::BinaryVector;
    use proptest::prelude::*;

    fn one_lane_snapshot(a: [u32; 4], f: f64) -> QueueSnapshot {
        QueueSnapshot::uniform(vec![a], f)
    }

    #[test]
    fn clearance_examples() {
        let c = compute_clearance::<f64>(&one_lane_snapshot([10, 20, 5, 0], 0.7));
        assert_eq!(c.row(0), &[21.0, 20.0, 10.0, 3.5, 0.0, 5.0]);
        let c = compute_clearance::<f64>(&one_lane_snapshot([0, 0, 0, 0], 0.7));
        assert_eq!(c.row(0), &[0.0; 6]);
        let c = compute_clearance::<f64>(&one_lane_snapshot([4, 6, 2, 8], 1.0));
        assert_eq!(c.get(0, 1), 10.0);
        assert_eq!(c.get(0, 4), 10.0);
    }

    #[test]
    fn clearance_uses_per_lane_fractions() {
        let snap = QueueSnapshot {
            counts: vec![[10, 10, 10, 10]],
            straight: vec![[0.5, 1.0, 0.0, 0.25]],
        };
        let c = compute_clearance::<f64>(&snap);
        assert_eq!(c.row(0), &[15.0, 10.0, 10.0, 2.5, 10.0, 10.0]);
    }

    #[test]
    fn sync_examples() {
        assert!(sync_flag(45.0, 90.0, 2.5));
        assert!(!sync_flag(45.0, 7.0, 2.5));
        assert!(sync_flag(45.0, 44.0, 2.5));
        assert!(sync_flag(45.0, 47.0, 2.5));
        assert!(sync_flag(45.0, 88.0, 2.5));
        assert!(!sync_flag(45.0, 85.0, 2.5));
        assert!(compute_sync_flags(&[45.0], -1.0, 2.5).is_err());
        assert!(compute_sync_flags(&[45.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn lambda_validation() {
        assert!(LambdaParams::default().validate().is_ok());
        let zero_penalty = LambdaParams {
            lambda4: 0.0,
            ..Default::default()
        };
        assert_eq!(zero_penalty.validate(), Err(CostError::PenaltyNotBinding));
        let negative = LambdaParams {
            lambda3: -0.1,
            ..Default::default()
        };
        assert!(matches!(
            negative.validate(),
            Err(CostError::BadLambda { name: "lambda3", .. })
        ));
    }

    fn grid(rows: usize, cols: usize) -> GridMap {
        GridMap::build(rows, cols, 1000.0, &[11.0, 17.0, 22.0, 28.0], 9).unwrap()
    }

    #[test]
    fn targets_interior_mode_one() {
        let map = grid(6, 6);
        let got: Vec<_> = coordination_targets(&map, 14, 1)
            .into_iter()
            .map(|t| (t.neighbor, t.mode, t.weight))
            .collect();
        assert_eq!(
            got,
            vec![
                (8, 1, WeightClass::Straight),
                (8, 3, WeightClass::StraightRight),
                (20, 1, WeightClass::Straight),
                (20, 2, WeightClass::StraightRight),
            ]
        );
    }

    #[test]
    fn targets_single_outflow_and_boundaries() {
        let map = grid(6, 6);
        let got: Vec<_> = coordination_targets(&map, 14, 2)
            .into_iter()
            .map(|t| (t.neighbor, t.mode, t.weight))
            .collect();
        assert_eq!(
            got,
            vec![(20, 1, WeightClass::Straight), (20, 2, WeightClass::StraightRight)]
        );
        // corner 0: no northern or western neighbor
        let corner: Vec<_> = coordination_targets(&map, 0, 1)
            .into_iter()
            .map(|t| (t.neighbor, t.mode))
            .collect();
        assert_eq!(corner, vec![(6, 1), (6, 2)]);
        assert!(coordination_targets(&map, 0, 3).is_empty());
        assert!(coordination_targets(&map, 0, 5).is_empty());
        let east: Vec<_> = coordination_targets(&map, 0, 6)
            .into_iter()
            .map(|t| (t.neighbor, t.mode))
            .collect();
        assert_eq!(east, vec![(1, 4), (1, 6)]);
        for t in coordination_targets(&map, 14, 4) {
            let road = map.road(t.road);
            assert_eq!((road.from, road.to), (14, t.neighbor));
        }
    }

    #[test]
    fn clearance_term_on_diagonal() {
        let layout = VariableLayout::new(1).unwrap();
        let c = compute_clearance::<f64>(&one_lane_snapshot([10, 20, 5, 0], 0.7));
        let mut q = layout.empty_qubo::<f64>();
        add_clearance_term(&mut q, &layout, &c, 1.0);
        assert_eq!(q.get(1, 1), -20.0);
        assert!(q.terms().all(|(r, c, _)| r == c));

        let zero = compute_clearance::<f64>(&one_lane_snapshot([0; 4], 0.7));
        let mut q = layout.empty_qubo::<f64>();
        add_clearance_term(&mut q, &layout, &zero, 1.0);
        assert_eq!(q.num_terms(), 0);
    }

    #[test]
    fn coordination_product_of_factors() {
        // 1x2: intersection 0 west of 1. Mode 6 at 0 sends lane-3 traffic east,
        // coupling to mode 6 at 1 with lambda3'.
        let map = grid(1, 2);
        let layout = VariableLayout::new(2).unwrap();
        let mut rows = vec![[0.0; 6]; 2];
        rows[0][5] = 10.0;
        rows[1][5] = 5.0;
        let c = ClearanceTable::from_rows(rows);
        let flags = SyncFlags::from_flags(vec![true; map.roads().len()]);
        let mut q = layout.empty_qubo::<f64>();
        add_coordination_term(&mut q, &layout, &map, &c, &flags, 60.0, 0.3, 0.7);
        assert_eq!(q.get(5, 11), -2100.0);
        assert_eq!(q.num_terms(), 1);

        let closed = SyncFlags::from_flags(vec![false; map.roads().len()]);
        let mut q = layout.empty_qubo::<f64>();
        add_coordination_term(&mut q, &layout, &map, &c, &closed, 60.0, 0.3, 0.7);
        assert_eq!(q.num_terms(), 0);
    }

    #[test]
    fn penalty_examples() {
        let layout = VariableLayout::new(1).unwrap();
        let mut q = layout.empty_qubo::<f64>();
        let offset = add_one_hot_penalty(&mut q, &layout, 60.0);
        assert_eq!(offset, 60.0);
        assert_eq!(q.num_terms(), 6 + 15);
        let eval = |bits: [u8; 6]| q.evaluate(&BinaryVector::from_bits(bits)).unwrap() + offset;
        assert_eq!(eval([0, 0, 1, 0, 0, 0]), 0.0);
        assert_eq!(eval([0; 6]), 60.0);
        assert_eq!(eval([1, 0, 0, 0, 1, 0]), 60.0);
        assert_eq!(eval([1, 1, 1, 0, 0, 0]), 240.0);
    }

    #[test]
    fn term_supports_are_disjoint() {
        let map = grid(3, 3);
        let layout = VariableLayout::new(9).unwrap();
        let snap = QueueSnapshot::uniform(
            (0..9).map(|i| [i as u32 + 1, 2, 3, 4]).collect(),
            0.7,
        );
        let c = compute_clearance::<f64>(&snap);
        let flags = SyncFlags::from_flags(vec![true; map.roads().len()]);
        let mut q2 = layout.empty_qubo::<f64>();
        add_coordination_term(&mut q2, &layout, &map, &c, &flags, 60.0, 0.3, 0.7);
        let mut q3 = layout.empty_qubo::<f64>();
        add_one_hot_penalty(&mut q3, &layout, 60.0);
        assert!(q2.num_terms() > 0);
        for (r, col, _) in q2.terms() {
            let (a, b) = (r / 6, col / 6);
            assert_ne!(a, b);
            assert!(map.road_between(a, b).is_some());
        }
        for (r, col, _) in q3.terms() {
            assert_eq!(r / 6, col / 6);
        }
    }

    #[test]
    fn build_objective_dimensions() {
        let map = grid(6, 6);
        let snap = QueueSnapshot::uniform(vec![[1, 2, 3, 4]; 36], 0.7);
        let obj = build_objective::<f64>(&snap, &map, 0.0, &LambdaParams::default(), 2.5).unwrap();
        assert_eq!(obj.qubo.num_vars(), 216);
        assert_eq!(obj.offset, 60.0 * 36.0);
        let short = QueueSnapshot::uniform(vec![[0; 4]; 4], 0.7);
        assert!(build_objective::<f64>(&short, &map, 0.0, &LambdaParams::default(), 2.5).is_err());
    }

    #[test]
    fn generic_over_f32() {
        let map = grid(2, 2);
        let snap = QueueSnapshot::uniform(vec![[4, 2, 0, 8]; 4], 0.5);
        let obj = build_objective::<f32>(&snap, &map, 0.0, &LambdaParams::default(), 2.5).unwrap();
        let x = obj.layout.encode_modes(&[1, 1, 1, 1]).unwrap();
        assert_eq!(obj.qubo.evaluate(&x).unwrap() + obj.offset, -12.0f32);
    }

    proptest! {
        #[test]
        fn scaling_queues_scales_terms(
            counts in prop::collection::vec(prop::array::uniform4(0u32..20), 4),
            k in 1u32..5,
        ) {
            let map = grid(2, 2);
            let layout = VariableLayout::new(4).unwrap();
            let flags = SyncFlags::from_flags(vec![true; map.roads().len()]);
            let build = |cs: Vec<[u32; 4]>| {
                let c = compute_clearance::<f64>(&QueueSnapshot::uniform(cs, 0.5));
                let mut q1 = layout.empty_qubo::<f64>();
                add_clearance_term(&mut q1, &layout, &c, 1.0);
                let mut q2 = layout.empty_qubo::<f64>();
                add_coordination_term(&mut q2, &layout, &map, &c, &flags, 60.0, 0.3, 0.7);
                (q1, q2)
            };
            let (base1, base2) = build(counts.clone());
            let (s1, s2) = build(counts.iter().map(|a| a.map(|v| v * k)).collect());
            let kf = k as f64;
            for r in 0..24 {
                for c in r..24 {
                    prop_assert!((s1.get(r, c) - kf * base1.get(r, c)).abs() < 1e-9);
                    prop_assert!((s2.get(r, c) - kf * kf * base2.get(r, c)).abs() < 1e-6);
                }
            }
        }
    }
}
