//! Square-grid road network: intersections, directed roads and travel times.
//!
//! Intersections are numbered row-major; row 0 is the northern edge.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid needs at least one row and one column, got {rows}x{cols}")]
    EmptyGrid { rows: usize, cols: usize },
    #[error("speed limit choices must not be empty")]
    NoSpeedChoices,
    #[error("speed limit {0} m/s must be positive and finite")]
    BadSpeed(f64),
    #[error("segment length {0} m must be positive and finite")]
    BadLength(f64),
    #[error("intersection {0} out of range")]
    NoSuchIntersection(usize),
    #[error("intersections {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),
    #[error("segment list does not match the {rows}x{cols} grid: {reason}")]
    SegmentMismatch {
        rows: usize,
        cols: usize,
        reason: String,
    },
}

/// Compass heading; `Up` is north (towards row 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    /// Neighbor order used everywhere: up, down, left, right.
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    /// Incoming lane (1..=4) at the downstream intersection for a car heading this way.
    ///
    /// Lane 1 heads north, lane 2 south, lane 3 east, lane 4 west.
    pub fn arrival_lane(self) -> usize {
        match self {
            Direction::Up => 1,
            Direction::Down => 2,
            Direction::Right => 3,
            Direction::Left => 4,
        }
    }

    /// Heading of cars on incoming `lane`.
    pub fn of_lane(lane: usize) -> Option<Direction> {
        match lane {
            1 => Some(Direction::Up),
            2 => Some(Direction::Down),
            3 => Some(Direction::Right),
            4 => Some(Direction::Left),
            _ => None,
        }
    }

    /// Heading after a right turn.
    pub fn right_turn(self) -> Direction {
        match self {
            Direction::Up => Direction::Right,
            Direction::Right => Direction::Down,
            Direction::Down => Direction::Left,
            Direction::Left => Direction::Up,
        }
    }
}

pub type RoadId = usize;

/// One direction of a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Road {
    pub id: RoadId,
    pub from: usize,
    pub to: usize,
    pub heading: Direction,
    pub length_m: f64,
    pub speed_mps: f64,
}

impl Road {
    pub fn travel_time(&self) -> f64 {
        self.length_m / self.speed_mps
    }

    /// Lane this road feeds at `self.to`.
    pub fn lane(&self) -> usize {
        self.heading.arrival_lane()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub a: usize,
    pub b: usize,
    pub speed_mps: f64,
}

/// Serialized map document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDocument {
    pub rows: usize,
    pub cols: usize,
    pub segment_length_m: f64,
    pub seed: u64,
    pub segments: Vec<SegmentRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    rows: usize,
    cols: usize,
    segment_length_m: f64,
    seed: u64,
    // keyed by (min, max) intersection id
    segment_speeds: BTreeMap<(usize, usize), f64>,
    roads: Vec<Road>,
    road_lookup: BTreeMap<(usize, usize), RoadId>,
}

impl GridMap {
    /// Builds a grid, drawing one speed limit per undirected segment uniformly
    /// from `speed_choices` with a generator seeded by `seed`.
    pub fn build(
        rows: usize,
        cols: usize,
        segment_length_m: f64,
        speed_choices: &[f64],
        seed: u64,
    ) -> Result<Self, GridError> {
        check_shape(rows, cols, segment_length_m)?;
        if speed_choices.is_empty() {
            return Err(GridError::NoSpeedChoices);
        }
        if let Some(&bad) = speed_choices.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(GridError::BadSpeed(bad));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut speeds = BTreeMap::new();
        for (a, b) in undirected_pairs(rows, cols) {
            let pick = speed_choices[rng.gen_range(0..speed_choices.len())];
            speeds.insert((a, b), pick);
        }
        Ok(Self::assemble(rows, cols, segment_length_m, seed, speeds))
    }

    pub fn from_document(doc: &MapDocument) -> Result<Self, GridError> {
        check_shape(doc.rows, doc.cols, doc.segment_length_m)?;
        let mismatch = |reason: String| GridError::SegmentMismatch {
            rows: doc.rows,
            cols: doc.cols,
            reason,
        };
        let expected: Vec<(usize, usize)> = undirected_pairs(doc.rows, doc.cols).collect();
        let mut speeds = BTreeMap::new();
        for seg in &doc.segments {
            if !(seg.speed_mps.is_finite() && seg.speed_mps > 0.0) {
                return Err(GridError::BadSpeed(seg.speed_mps));
            }
            let key = (seg.a.min(seg.b), seg.a.max(seg.b));
            if expected.binary_search(&key).is_err() {
                return Err(mismatch(format!("{} and {} are not adjacent", seg.a, seg.b)));
            }
            if speeds.insert(key, seg.speed_mps).is_some() {
                return Err(mismatch(format!("segment {}-{} listed twice", key.0, key.1)));
            }
        }
        if speeds.len() != expected.len() {
            return Err(mismatch(format!(
                "expected {} segments, found {}",
                expected.len(),
                speeds.len()
            )));
        }
        Ok(Self::assemble(doc.rows, doc.cols, doc.segment_length_m, doc.seed, speeds))
    }

    pub fn to_document(&self) -> MapDocument {
        MapDocument {
            rows: self.rows,
            cols: self.cols,
            segment_length_m: self.segment_length_m,
            seed: self.seed,
            segments: self
                .segment_speeds
                .iter()
                .map(|(&(a, b), &speed_mps)| SegmentRecord { a, b, speed_mps })
                .collect(),
        }
    }

    fn assemble(
        rows: usize,
        cols: usize,
        segment_length_m: f64,
        seed: u64,
        segment_speeds: BTreeMap<(usize, usize), f64>,
    ) -> Self {
        let mut map = Self {
            rows,
            cols,
            segment_length_m,
            seed,
            segment_speeds,
            roads: Vec::new(),
            road_lookup: BTreeMap::new(),
        };
        let mut roads = Vec::new();
        for from in 0..map.num_intersections() {
            for (to, heading) in map.neighbors(from) {
                let key = (from.min(to), from.max(to));
                let id = roads.len();
                roads.push(Road {
                    id,
                    from,
                    to,
                    heading,
                    length_m: segment_length_m,
                    speed_mps: map.segment_speeds[&key],
                });
                map.road_lookup.insert((from, to), id);
            }
        }
        map.roads = roads;
        map
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn segment_length_m(&self) -> f64 {
        self.segment_length_m
    }

    pub fn num_intersections(&self) -> usize {
        self.rows * self.cols
    }

    pub fn num_segments(&self) -> usize {
        self.segment_speeds.len()
    }

    /// Directed roads, ordered by origin id then neighbor order.
    pub fn roads(&self) -> &[Road] {
        &self.roads
    }

    pub fn road(&self, id: RoadId) -> &Road {
        &self.roads[id]
    }

    pub fn road_between(&self, from: usize, to: usize) -> Option<&Road> {
        self.road_lookup.get(&(from, to)).map(|&id| &self.roads[id])
    }

    /// Neighbor of `i` in direction `dir`, if inside the grid.
    pub fn neighbor(&self, i: usize, dir: Direction) -> Option<usize> {
        if i >= self.num_intersections() {
            return None;
        }
        let (r, c) = (i / self.cols, i % self.cols);
        match dir {
            Direction::Up if r > 0 => Some(i - self.cols),
            Direction::Down if r + 1 < self.rows => Some(i + self.cols),
            Direction::Left if c > 0 => Some(i - 1),
            Direction::Right if c + 1 < self.cols => Some(i + 1),
            _ => None,
        }
    }

    /// Existing neighbors in (up, down, left, right) order.
    pub fn neighbors(&self, i: usize) -> Vec<(usize, Direction)> {
        Direction::ALL
            .iter()
            .filter_map(|&d| self.neighbor(i, d).map(|n| (n, d)))
            .collect()
    }

    /// Average time to traverse `from -> to`, assuming cars drive at the limit.
    pub fn travel_time(&self, from: usize, to: usize) -> Result<f64, GridError> {
        let n = self.num_intersections();
        for id in [from, to] {
            if id >= n {
                return Err(GridError::NoSuchIntersection(id));
            }
        }
        self.road_between(from, to)
            .map(Road::travel_time)
            .ok_or(GridError::NotAdjacent(from, to))
    }

    /// Travel time of every road, indexed by [`RoadId`].
    pub fn travel_times(&self) -> Vec<f64> {
        self.roads.iter().map(Road::travel_time).collect()
    }

    pub fn max_speed(&self) -> f64 {
        self.roads.iter().map(|r| r.speed_mps).fold(0.0, f64::max)
    }

    /// Road a car on `road` takes when leaving in `heading`, if it stays on the grid.
    pub fn continuation(&self, road: RoadId, heading: Direction) -> Option<RoadId> {
        let at = self.roads[road].to;
        self.neighbor(at, heading)
            .and_then(|next| self.road_lookup.get(&(at, next)).copied())
    }
}

fn check_shape(rows: usize, cols: usize, length: f64) -> Result<(), GridError> {
    if rows == 0 || cols == 0 {
        return Err(GridError::EmptyGrid { rows, cols });
    }
    if !(length.is_finite() && length > 0.0) {
        return Err(GridError::BadLength(length));
    }
    Ok(())
}

/// Undirected adjacent pairs `(a, b)` with `a < b`, ascending.
fn undirected_pairs(rows: usize, cols: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..rows * cols).flat_map(move |i| {
        let (r, c) = (i / cols, i % cols);
        let right = (c + 1 < cols).then_some((i, i + 1));
        let down = (r + 1 < rows).then_some((i, i + cols));
        right.into_iter().chain(down)
    })
}
