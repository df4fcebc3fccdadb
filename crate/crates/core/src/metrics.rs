//! Speed-weighted waiting time and controller comparison.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::RoadId;
use crate::sim::SimState;

/// Stopped cars sharing an approach and a destination road.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoppedGroup {
    pub intersection: usize,
    pub lane: usize,
    /// Destination road; `None` for cars about to leave the grid.
    pub next_road: Option<RoadId>,
    pub cars: usize,
    /// Destination speed limit over the map's maximum.
    pub weight: f64,
}

/// Stopped cars grouped by (intersection, lane, destination road).
///
/// Cars leaving the grid are weighted by their current road's limit.
pub fn stopped_groups(state: &SimState) -> Vec<StoppedGroup> {
    let map = state.map();
    let max_speed = map.max_speed();
    let mut groups: BTreeMap<(usize, usize, Option<RoadId>), (usize, f64)> = BTreeMap::new();
    for road in map.roads() {
        for car in state.cars_on(road.id).filter(|c| c.stopped) {
            let next = state.next_road(car);
            let speed = next.map_or(road.speed_mps, |r| map.road(r).speed_mps);
            groups
                .entry((road.to, road.lane(), next))
                .or_insert((0, speed / max_speed))
                .0 += 1;
        }
    }
    groups
        .into_iter()
        .map(|((intersection, lane, next_road), (cars, weight))| StoppedGroup {
            intersection,
            lane,
            next_road,
            cars,
            weight,
        })
        .collect()
}

/// Weighted car-seconds wasted during one step of length `dt`.
pub fn time_wasted_step(state: &SimState, dt: f64) -> f64 {
    stopped_groups(state)
        .iter()
        .map(|g| g.weight * g.cars as f64 * dt)
        .sum()
}

/// Running total of wasted time for one controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricLedger {
    pub controller: String,
    pub cumulative: f64,
    /// `(t, increment)` at the end of each step.
    pub series: Vec<(f64, f64)>,
}

impl MetricLedger {
    pub fn new(controller: impl Into<String>) -> Self {
        Self {
            controller: controller.into(),
            cumulative: 0.0,
            series: Vec::new(),
        }
    }

    /// Panics on a negative increment.
    pub fn record(&mut self, t: f64, increment: f64) {
        assert!(increment >= 0.0, "wasted time cannot decrease");
        self.cumulative += increment;
        self.series.push((t, increment));
    }

    pub fn car_hours(&self) -> f64 {
        self.cumulative / 3600.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("a comparison needs at least two ledgers, got {0}")]
    TooFewLedgers(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerTotal {
    pub controller: String,
    pub car_seconds: f64,
    pub car_hours: f64,
}

/// `first` versus `second`; positive savings mean `first` wasted less.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseSaving {
    pub first: String,
    pub second: String,
    pub saved_car_seconds: f64,
    pub saved_car_minutes: f64,
    /// Savings relative to the worse of the two totals.
    pub saved_percent: f64,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub totals: Vec<ControllerTotal>,
    pub pairs: Vec<PairwiseSaving>,
}

impl ComparisonReport {
    pub fn total(&self, controller: &str) -> Option<f64> {
        self.totals
            .iter()
            .find(|t| t.controller == controller)
            .map(|t| t.car_seconds)
    }

    pub fn pair(&self, first: &str, second: &str) -> Option<&PairwiseSaving> {
        self.pairs
            .iter()
            .find(|p| p.first == first && p.second == second)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for t in &self.totals {
            out.push_str(&format!(
                "{:<16} {:>14.3} car-s {:>10.4} car-h\n",
                t.controller, t.car_seconds, t.car_hours
            ));
        }
        for p in &self.pairs {
            out.push_str(&p.summary);
            out.push('\n');
        }
        out
    }
}

/// Totals plus every pairwise saving, in ledger order.
pub fn report_comparison(ledgers: &[MetricLedger]) -> Result<ComparisonReport, ReportError> {
    if ledgers.len() < 2 {
        return Err(ReportError::TooFewLedgers(ledgers.len()));
    }
    let totals = ledgers
        .iter()
        .map(|l| ControllerTotal {
            controller: l.controller.clone(),
            car_seconds: l.cumulative,
            car_hours: l.car_hours(),
        })
        .collect();
    let mut pairs = Vec::new();
    for (i, a) in ledgers.iter().enumerate() {
        for b in &ledgers[i + 1..] {
            let saved = b.cumulative - a.cumulative;
            let worse = a.cumulative.max(b.cumulative);
            let percent = if worse > 0.0 { saved / worse * 100.0 } else { 0.0 };
            let (winner, loser) = if saved >= 0.0 { (a, b) } else { (b, a) };
            let summary = format!(
                "{} saves {:.1} car-seconds ({:.1} car-minutes, {:.1}%) compared to {}",
                winner.controller,
                saved.abs(),
                saved.abs() / 60.0,
                percent.abs(),
                loser.controller
            );
            pairs.push(PairwiseSaving {
                first: a.controller.clone(),
                second: b.controller.clone(),
                saved_car_seconds: saved,
                saved_car_minutes: saved / 60.0,
                saved_percent: percent,
                summary,
            });
        }
    }
    Ok(ComparisonReport { totals, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridMap;
    use crate::modes::{ModeAssignment, Movement};
    use crate::sim::{Car, SimParams};

    fn ledger(name: &str, total: f64) -> MetricLedger {
        let mut l = MetricLedger::new(name);
        l.record(1.0, total);
        l
    }

    /// Ten cars queued on road 0 -> 1 of a 1x3 corridor with the given limits.
    fn queued_scene(speeds: [f64; 2], turn: Movement) -> SimState {
        let doc = crate::grid::MapDocument {
            rows: 1,
            cols: 3,
            segment_length_m: 1000.0,
            seed: 0,
            segments: vec![
                crate::grid::SegmentRecord { a: 0, b: 1, speed_mps: speeds[0] },
                crate::grid::SegmentRecord { a: 1, b: 2, speed_mps: speeds[1] },
            ],
        };
        let map = GridMap::from_document(&doc).unwrap();
        let road = map.road_between(0, 1).unwrap().id;
        let mut sim = SimState::new(map, 0, SimParams::default(), 0).unwrap();
        let cars = (0..10)
            .map(|k| Car {
                id: k,
                road,
                position: 1000.0 - 5.0 * k as f64,
                stopped: true,
                next_turn: turn,
            })
            .collect();
        sim.place_cars(road, cars);
        sim.apply(ModeAssignment::uniform(3, 1)).unwrap();
        sim
    }

    #[test]
    fn full_weight_when_next_road_is_fastest() {
        let sim = queued_scene([11.0, 28.0], Movement::Straight);
        assert_eq!(time_wasted_step(&sim, 1.0), 10.0);
    }

    #[test]
    fn weight_by_next_road_limit() {
        let sim = queued_scene([28.0, 11.0], Movement::Straight);
        let got = time_wasted_step(&sim, 1.0);
        assert!((got - 10.0 * 11.0 / 28.0).abs() < 1e-12);
        let groups = stopped_groups(&sim);
        assert_eq!(groups.len(), 1);
        assert_eq!((groups[0].intersection, groups[0].lane, groups[0].cars), (1, 3, 10));
    }

    #[test]
    fn leaving_cars_use_current_limit() {
        // eastbound right turn at the single-row grid's intersection 1 heads south: off grid
        let sim = queued_scene([22.0, 28.0], Movement::Right);
        let got = time_wasted_step(&sim, 1.0);
        assert!((got - 10.0 * 22.0 / 28.0).abs() < 1e-12);
    }

    #[test]
    fn nothing_stopped_nothing_wasted() {
        let map = GridMap::build(2, 2, 1000.0, &[11.0, 28.0], 1).unwrap();
        let sim = SimState::new(map, 40, SimParams::default(), 1).unwrap();
        assert_eq!(time_wasted_step(&sim, 1.0), 0.0);
    }

    #[test]
    fn comparison_arithmetic() {
        let r = report_comparison(&[ledger("A", 1000.0), ledger("B", 1200.0)]).unwrap();
        let p = r.pair("A", "B").unwrap();
        assert_eq!(p.saved_car_seconds, 200.0);
        assert!((p.saved_percent - 16.666_666_666).abs() < 1e-6);
        assert!(p.summary.starts_with("A saves 200.0 car-seconds"));
        assert!(p.summary.contains("16.7%"));

        let same = report_comparison(&[ledger("A", 50.0), ledger("B", 50.0)]).unwrap();
        assert_eq!(same.pairs[0].saved_car_seconds, 0.0);

        let three =
            report_comparison(&[ledger("A", 1.0), ledger("B", 2.0), ledger("C", 3.0)]).unwrap();
        assert_eq!(three.pairs.len(), 3);
        assert_eq!(three.totals[2].car_hours, 3.0 / 3600.0);

        assert_eq!(report_comparison(&[]), Err(ReportError::TooFewLedgers(0)));
    }

    #[test]
    fn ledger_sums_increments() {
        let mut l = MetricLedger::new("x");
        for (t, inc) in [(1.0, 2.0), (2.0, 0.0), (3.0, 1.5)] {
            l.record(t, inc);
        }
        assert_eq!(l.cumulative, l.series.iter().map(|s| s.1).sum::<f64>());
    }
}
