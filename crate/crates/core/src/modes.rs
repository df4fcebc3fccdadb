//! The six signal modes and the incoming lanes they serve.
//!
//! Lane 1 approaches from the south heading north, lane 2 from the north
//! heading south, lane 3 from the west heading east, lane 4 from the east
//! heading west. Left turns are never controlled.
//!
//! | mode | serves                        |
//! |------|-------------------------------|
//! | 1    | lanes 1 and 2, straight only  |
//! | 2    | lane 2, straight and right    |
//! | 3    | lane 1, straight and right    |
//! | 4    | lanes 3 and 4, straight only  |
//! | 5    | lane 4, straight and right    |
//! | 6    | lane 3, straight and right    |

use serde::{Deserialize, Serialize};

pub const NUM_MODES: usize = 6;
pub const NUM_LANES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Movement {
    Straight,
    Right,
}

/// Whether `mode` lets `movement` proceed from incoming `lane`.
#[allow(clippy::match_like_matches_macro)]
pub fn allowed(mode: usize, lane: usize, movement: Movement) -> bool {
    match (mode, lane, movement) {
        (1, 1 | 2, Movement::Straight) => true,
        (2, 2, _) | (3, 1, _) => true,
        (4, 3 | 4, Movement::Straight) => true,
        (5, 4, _) | (6, 3, _) => true,
        _ => false,
    }
}

/// Lanes whose straight-through traffic `mode` releases.
pub fn straight_lanes(mode: usize) -> &'static [usize] {
    match mode {
        1 => &[1, 2],
        2 => &[2],
        3 => &[1],
        4 => &[3, 4],
        5 => &[4],
        6 => &[3],
        _ => &[],
    }
}

/// The straight-only mode covering `lane`'s axis.
pub fn straight_mode_for_lane(lane: usize) -> usize {
    if lane <= 2 {
        1
    } else {
        4
    }
}

/// The straight-plus-right mode dedicated to `lane`.
pub fn straight_right_mode_for_lane(lane: usize) -> usize {
    match lane {
        1 => 3,
        2 => 2,
        3 => 6,
        _ => 5,
    }
}

/// One active mode (1..=6) per intersection.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeAssignment(Vec<u8>);

impl ModeAssignment {
    /// Panics if any mode is outside 1..=6.
    pub fn new(modes: Vec<u8>) -> Self {
        assert!(
            modes.iter().all(|&m| (1..=NUM_MODES as u8).contains(&m)),
            "modes must be in 1..=6"
        );
        Self(modes)
    }

    pub fn uniform(num_intersections: usize, mode: u8) -> Self {
        Self::new(vec![mode; num_intersections])
    }

    pub fn mode(&self, intersection: usize) -> usize {
        self.0[intersection] as usize
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }
}
