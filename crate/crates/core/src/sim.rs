//! Deterministic one-second traffic microsimulation on the grid.
//!
//! Each directed road holds a single lane of cars ordered from the stop line
//! backwards. Cars drive at the road's speed limit, keep `car_spacing_m`
//! behind their leader, and cross an intersection only when the active mode
//! allows their movement. A crossing car carries the distance it overshot the
//! stop line onto its next road, held back at least `car_spacing_m` behind
//! the cars already there. Cars leaving the grid are removed.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::QueueSnapshot;
use crate::grid::{GridMap, RoadId};
use crate::modes::{self, ModeAssignment, Movement, NUM_LANES};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("{cars} cars on a road exceed its capacity of {capacity} at {spacing} m spacing")]
    OverCapacity {
        cars: usize,
        capacity: usize,
        spacing: f64,
    },
    #[error("straight fraction {0} outside [0, 1]")]
    BadFraction(f64),
    #[error("car spacing {0} m must be positive")]
    BadSpacing(f64),
    #[error("assignment covers {got} intersections, map has {expected}")]
    AssignmentSize { expected: usize, got: usize },
}

/// Simulation parameters that do not change during a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Probability that a car entering a road will go straight at its end.
    pub f_straight: f64,
    /// Minimum gap between cars on one road (jam spacing).
    pub car_spacing_m: f64,
    /// Largest gap for a car to count as queued.
    pub gap_threshold_m: f64,
    /// Report measured straight fractions instead of `f_straight`.
    pub measured_fractions: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            f_straight: 0.7,
            car_spacing_m: 5.0,
            gap_threshold_m: 5.0,
            measured_fractions: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Car {
    pub id: u32,
    pub road: RoadId,
    /// Meters from the start of `road`.
    pub position: f64,
    pub stopped: bool,
    pub next_turn: Movement,
}

struct Crossing {
    car: Car,
    /// `None` when the movement leaves the grid.
    dest: Option<RoadId>,
    overshoot: f64,
}

struct RoadPlan {
    kept: VecDeque<Car>,
    crossing: Vec<Crossing>,
}

/// What the signals currently allow.
#[derive(Debug, Clone, PartialEq)]
pub enum SignalPlan {
    Modes(ModeAssignment),
    /// Every movement permitted everywhere; used to check free-flow behavior.
    AllGreen,
}

impl SignalPlan {
    fn allows(&self, intersection: usize, lane: usize, movement: Movement) -> bool {
        match self {
            SignalPlan::Modes(a) => modes::allowed(a.mode(intersection), lane, movement),
            SignalPlan::AllGreen => true,
        }
    }
}

/// Car counts around one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StepOutcome {
    pub cars_before: usize,
    pub cars_after: usize,
    pub cars_exited: usize,
    pub crossings: usize,
}

#[derive(Debug, Clone)]
pub struct SimState {
    map: GridMap,
    params: SimParams,
    // per road, front (nearest the stop line) first
    queues: Vec<VecDeque<Car>>,
    // incoming[i][k - 1]: road arriving at i on lane k
    incoming: Vec<[Option<RoadId>; NUM_LANES]>,
    t: f64,
    signals: SignalPlan,
    rng: ChaCha8Rng,
}

impl SimState {
    /// Spreads `n_cars` evenly over the directed roads (lowest road ids take
    /// the remainder), evenly spaced along each road, all signals on mode 1.
    pub fn new(map: GridMap, n_cars: usize, params: SimParams, seed: u64) -> Result<Self, SimError> {
        if !(0.0..=1.0).contains(&params.f_straight) {
            return Err(SimError::BadFraction(params.f_straight));
        }
        if !(params.car_spacing_m.is_finite() && params.car_spacing_m > 0.0) {
            return Err(SimError::BadSpacing(params.car_spacing_m));
        }
        let roads = map.roads().len();
        if roads == 0 {
            if n_cars > 0 {
                return Err(SimError::OverCapacity {
                    cars: n_cars,
                    capacity: 0,
                    spacing: params.car_spacing_m,
                });
            }
            return Ok(Self::assemble(map, params, Vec::new(), ChaCha8Rng::seed_from_u64(seed)));
        }
        let base = n_cars / roads;
        let extra = n_cars % roads;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut queues = Vec::with_capacity(roads);
        let mut next_id = 0u32;
        for road in map.roads() {
            let count = base + usize::from(road.id < extra);
            let capacity = (road.length_m / params.car_spacing_m + EPS).floor() as usize;
            if count > capacity {
                return Err(SimError::OverCapacity {
                    cars: count,
                    capacity,
                    spacing: params.car_spacing_m,
                });
            }
            let gap = road.length_m / count.max(1) as f64;
            let queue = (0..count)
                .rev()
                .map(|k| Car {
                    id: {
                        next_id += 1;
                        next_id - 1
                    },
                    road: road.id,
                    position: k as f64 * gap,
                    stopped: false,
                    next_turn: draw_turn(&mut rng, params.f_straight),
                })
                .collect();
            queues.push(queue);
        }
        Ok(Self::assemble(map, params, queues, rng))
    }

    fn assemble(map: GridMap, params: SimParams, queues: Vec<VecDeque<Car>>, rng: ChaCha8Rng) -> Self {
        let mut incoming = vec![[None; NUM_LANES]; map.num_intersections()];
        for road in map.roads() {
            incoming[road.to][road.lane() - 1] = Some(road.id);
        }
        let signals = SignalPlan::Modes(ModeAssignment::uniform(map.num_intersections(), 1));
        Self {
            map,
            params,
            queues,
            incoming,
            t: 0.0,
            signals,
            rng,
        }
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    /// Simulated seconds elapsed.
    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn signals(&self) -> &SignalPlan {
        &self.signals
    }

    pub fn car_count(&self) -> usize {
        self.queues.iter().map(VecDeque::len).sum()
    }

    /// Cars on `road`, nearest the stop line first.
    pub fn cars_on(&self, road: RoadId) -> impl Iterator<Item = &Car> {
        self.queues[road].iter()
    }

    pub fn cars(&self) -> impl Iterator<Item = &Car> {
        self.queues.iter().flatten()
    }

    /// Road feeding `lane` (1..=4) at `intersection`, if any.
    pub fn incoming_road(&self, intersection: usize, lane: usize) -> Option<RoadId> {
        self.incoming[intersection][lane - 1]
    }

    pub fn apply(&mut self, assignment: ModeAssignment) -> Result<(), SimError> {
        if assignment.len() != self.map.num_intersections() {
            return Err(SimError::AssignmentSize {
                expected: self.map.num_intersections(),
                got: assignment.len(),
            });
        }
        self.signals = SignalPlan::Modes(assignment);
        Ok(())
    }

    pub fn set_all_green(&mut self) {
        self.signals = SignalPlan::AllGreen;
    }

    /// Replaces the cars on `road`; test scaffolding for hand-built scenes.
    #[doc(hidden)]
    pub fn place_cars(&mut self, road: RoadId, mut cars: Vec<Car>) {
        cars.sort_by(|a, b| b.position.total_cmp(&a.position));
        for car in &mut cars {
            car.road = road;
        }
        self.queues[road] = cars.into();
    }

    /// Advances every car by `dt` seconds.
    ///
    /// Roads are first planned independently as if every car reaching a green
    /// stop line could cross. Entries are then checked against where each
    /// destination's cars end the step; a road whose crossing car does not
    /// fit is re-planned with its crossings capped there, until nothing changes.
    pub fn step(&mut self, dt: f64) -> StepOutcome {
        let cars_before = self.car_count();
        let spacing = self.params.car_spacing_m;
        let roads = self.queues.len();
        let mut plans: Vec<RoadPlan> = (0..roads).map(|r| self.plan_road(r, dt, usize::MAX)).collect();

        loop {
            let mut limit: Vec<f64> = plans
                .iter()
                .zip(self.map.roads())
                .map(|(p, road)| p.kept.back().map_or(road.length_m, |c| c.position - spacing))
                .collect();
            let mut blocked = None;
            'scan: for (r, plan) in plans.iter().enumerate() {
                for (k, crossing) in plan.crossing.iter().enumerate() {
                    let Some(dest) = crossing.dest else { continue };
                    if limit[dest] < -EPS {
                        blocked = Some((r, k));
                        break 'scan;
                    }
                    limit[dest] = crossing.overshoot.min(limit[dest]).max(0.0) - spacing;
                }
            }
            match blocked {
                Some((r, k)) => plans[r] = self.plan_road(r, dt, k),
                None => break,
            }
        }

        let mut entry: Vec<f64> = plans
            .iter()
            .zip(self.map.roads())
            .map(|(p, road)| p.kept.back().map_or(road.length_m, |c| c.position - spacing))
            .collect();
        let mut transfers = Vec::new();
        let mut exited = 0;
        let mut crossings = 0;
        for (r, plan) in plans.into_iter().enumerate() {
            self.queues[r] = plan.kept;
            for Crossing { mut car, dest, overshoot } in plan.crossing {
                crossings += 1;
                let Some(dest) = dest else {
                    exited += 1;
                    continue;
                };
                car.road = dest;
                car.position = overshoot.min(entry[dest]).max(0.0);
                car.stopped = false;
                car.next_turn = draw_turn(&mut self.rng, self.params.f_straight);
                entry[dest] = car.position - spacing;
                transfers.push(car);
            }
        }
        for car in transfers {
            self.queues[car.road].push_back(car);
        }
        self.t += dt;
        StepOutcome {
            cars_before,
            cars_after: self.car_count(),
            cars_exited: exited,
            crossings,
        }
    }

    /// Moves the cars of one road, letting at most `max_crossings` of them
    /// through the stop line.
    fn plan_road(&self, road_id: RoadId, dt: f64, max_crossings: usize) -> RoadPlan {
        let road = self.map.road(road_id);
        let spacing = self.params.car_spacing_m;
        let advance = road.speed_mps * dt;
        let length = road.length_m;
        let lane = road.lane();
        let mut kept: VecDeque<Car> = VecDeque::with_capacity(self.queues[road_id].len());
        let mut crossing = Vec::new();
        let mut leader_old: Option<f64> = None;

        for &car in &self.queues[road_id] {
            let mut car = car;
            let old = car.position;
            let prev_old = leader_old.replace(old);

            // queued cars start one step after their leader opens a gap
            let may_start = !car.stopped || prev_old.is_none_or(|p| p - old > spacing + EPS);
            if !may_start {
                kept.push_back(car);
                continue;
            }

            let target = old + advance;
            match kept.back().map(|c| (c.position, c.stopped)) {
                Some((lead_pos, lead_stopped)) => {
                    let limit = lead_pos - spacing;
                    if target > limit {
                        car.position = limit.max(old);
                        car.stopped = lead_stopped || car.position - old < EPS;
                    } else {
                        car.position = target;
                        car.stopped = false;
                    }
                }
                None if target < length - EPS => {
                    car.position = target;
                    car.stopped = false;
                }
                None => {
                    if crossing.len() < max_crossings && self.signals.allows(road.to, lane, car.next_turn) {
                        crossing.push(Crossing {
                            car,
                            dest: self.next_road(&car),
                            overshoot: target - length,
                        });
                        continue;
                    }
                    car.position = length;
                    car.stopped = true;
                }
            }
            kept.push_back(car);
        }
        RoadPlan { kept, crossing }
    }

    /// Queued cars per incoming lane.
    ///
    /// A lane's queue is the run of cars from the stop line backwards whose
    /// successive gaps (the first measured to the stop line) stay within
    /// `gap_threshold_m`. Empty lanes report the configured straight fraction.
    pub fn measure_queues(&self) -> QueueSnapshot {
        let threshold = self.params.gap_threshold_m + EPS;
        let n = self.map.num_intersections();
        let mut counts = vec![[0u32; NUM_LANES]; n];
        let mut straight = vec![[self.params.f_straight; NUM_LANES]; n];
        for i in 0..n {
            for lane in 1..=NUM_LANES {
                let Some(road) = self.incoming_road(i, lane) else {
                    continue;
                };
                let mut edge = self.map.road(road).length_m;
                let mut queued = 0u32;
                let mut going_straight = 0u32;
                for car in &self.queues[road] {
                    if edge - car.position > threshold {
                        break;
                    }
                    queued += 1;
                    going_straight += u32::from(car.next_turn == Movement::Straight);
                    edge = car.position;
                }
                counts[i][lane - 1] = queued;
                if queued > 0 && self.params.measured_fractions {
                    straight[i][lane - 1] = going_straight as f64 / queued as f64;
                }
            }
        }
        QueueSnapshot { counts, straight }
    }

    /// Road a stopped car on `road` would move onto, or `None` if it leaves the grid.
    pub fn next_road(&self, car: &Car) -> Option<RoadId> {
        let road = self.map.road(car.road);
        let heading = match car.next_turn {
            Movement::Straight => road.heading,
            Movement::Right => road.heading.right_turn(),
        };
        self.map.continuation(car.road, heading)
    }
}

fn draw_turn(rng: &mut ChaCha8Rng, f_straight: f64) -> Movement {
    if rng.gen_bool(f_straight) {
        Movement::Straight
    } else {
        Movement::Right
    }
}

/// Every intersection shows `1 + floor(t / period) mod 6`.
pub fn fixed_cycle_assignment(t: f64, period: f64, num_intersections: usize) -> ModeAssignment {
    assert!(period > 0.0, "cycle period must be positive");
    let phase = ((t / period + EPS).floor() as u64 % modes::NUM_MODES as u64) as u8;
    ModeAssignment::uniform(num_intersections, 1 + phase)
}
