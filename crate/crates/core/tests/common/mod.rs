//! Reference implementations written directly from the model definitions,
//! sharing no code with the library beyond plain map accessors.

#![allow(dead_code)]

use rand::Rng;
use traffic_qubo::{GridMap, QueueSnapshot};

pub const SPEEDS: [f64; 4] = [11.0, 17.0, 22.0, 28.0];

/// (row, col) step for a heading: north, south, east, west.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Heading {
    N,
    S,
    E,
    W,
}

/// Headings whose straight flow mode `j` releases.
pub fn straight_outflows(j: usize) -> &'static [Heading] {
    match j {
        1 => &[Heading::N, Heading::S],
        2 => &[Heading::S],
        3 => &[Heading::N],
        4 => &[Heading::E, Heading::W],
        5 => &[Heading::W],
        6 => &[Heading::E],
        _ => unreachable!(),
    }
}

/// Lane a car travelling `h` occupies when it reaches the next intersection.
fn lane_of(h: Heading) -> usize {
    match h {
        Heading::N => 1,
        Heading::S => 2,
        Heading::E => 3,
        Heading::W => 4,
    }
}

/// (straight-only mode, straight-and-right mode) serving an arrival lane.
fn receiving_modes(lane: usize) -> (usize, usize) {
    match lane {
        1 => (1, 3),
        2 => (1, 2),
        3 => (4, 6),
        4 => (4, 5),
        _ => unreachable!(),
    }
}

pub fn step(map: &GridMap, i: usize, h: Heading) -> Option<usize> {
    let (r, c) = ((i / map.cols()) as isize, (i % map.cols()) as isize);
    let (r, c) = match h {
        Heading::N => (r - 1, c),
        Heading::S => (r + 1, c),
        Heading::E => (r, c + 1),
        Heading::W => (r, c - 1),
    };
    if r < 0 || c < 0 || r >= map.rows() as isize || c >= map.cols() as isize {
        None
    } else {
        Some(r as usize * map.cols() + c as usize)
    }
}

/// Cars clearable by each mode: `[f1a1 + f2a2, a2, a1, f3a3 + f4a4, a4, a3]`.
pub fn clearance(snapshot: &QueueSnapshot, i: usize) -> [f64; 6] {
    let a: Vec<f64> = snapshot.counts[i].iter().map(|&v| v as f64).collect();
    let f = snapshot.straight[i];
    [
        f[0] * a[0] + f[1] * a[1],
        a[1],
        a[0],
        f[2] * a[2] + f[3] * a[3],
        a[3],
        a[2],
    ]
}

pub fn tau(map: &GridMap, from: usize, to: usize, t: f64, tol: f64) -> bool {
    let road = map.road_between(from, to).unwrap();
    let dt = road.length_m / road.speed_mps;
    if t < dt {
        return (dt - t).abs() <= tol;
    }
    let k = (t / dt).floor();
    let behind = t - k * dt;
    let ahead = (k + 1.0) * dt - t;
    behind <= tol || ahead <= tol
}

pub struct Lambdas {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l3p: f64,
    pub l4: f64,
}

pub const DEFAULT_LAMBDAS: Lambdas = Lambdas {
    l1: 1.0,
    l2: 60.0,
    l3: 0.3,
    l3p: 0.7,
    l4: 60.0,
};

/// Clearance reward, coordination bonus and one-mode penalty summed term by
/// term. `x[i][j - 1]` selects mode `j` at intersection `i`.
pub fn direct_objective(
    map: &GridMap,
    snapshot: &QueueSnapshot,
    t: f64,
    tol: f64,
    lam: &Lambdas,
    x: &[[bool; 6]],
) -> f64 {
    let n = map.num_intersections();
    let c: Vec<[f64; 6]> = (0..n).map(|i| clearance(snapshot, i)).collect();
    let on = |i: usize, j: usize| if x[i][j - 1] { 1.0 } else { 0.0 };

    let mut q1 = 0.0;
    let mut q2 = 0.0;
    let mut q3 = 0.0;
    for i in 0..n {
        for j in 1..=6 {
            q1 -= lam.l1 * c[i][j - 1] * on(i, j);
            let mut bonus = 0.0;
            for &h in straight_outflows(j) {
                let Some(k) = step(map, i, h) else { continue };
                if !tau(map, i, k, t, tol) {
                    continue;
                }
                let (straight, straight_right) = receiving_modes(lane_of(h));
                bonus += lam.l3 * c[k][straight - 1] * on(k, straight);
                bonus += lam.l3p * c[k][straight_right - 1] * on(k, straight_right);
            }
            q2 -= lam.l2 * c[i][j - 1] * on(i, j) * bonus;
        }
        let chosen: f64 = (1..=6).map(|j| on(i, j)).sum();
        q3 += lam.l4 * (1.0 - chosen).powi(2);
    }
    q1 + q2 + q3
}

pub fn random_snapshot(rng: &mut impl Rng, n: usize, max_queue: u32) -> QueueSnapshot {
    let counts = (0..n)
        .map(|_| std::array::from_fn(|_| rng.gen_range(0..=max_queue)))
        .collect();
    let straight = (0..n)
        .map(|_| std::array::from_fn(|_| rng.gen_range(0.0..=1.0)))
        .collect();
    QueueSnapshot { counts, straight }
}

pub fn random_vector(rng: &mut impl Rng, n: usize) -> Vec<[bool; 6]> {
    (0..n).map(|_| std::array::from_fn(|_| rng.gen_bool(0.5))).collect()
}

pub fn flatten(x: &[[bool; 6]]) -> traffic_qubo::BinaryVector {
    x.iter().flatten().copied().collect::<Vec<_>>().into()
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
