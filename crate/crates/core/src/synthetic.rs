//! Synthetic ground-truth networks with known activity patterns, for tests,
//! benchmarks and offline demos.
//!
//! Contacts are activity driven: every existing contact survives to the next
//! snapshot with a fixed probability, and new contacts appear between random
//! pairs at a rate that follows the wall clock.

use std::f64::consts::PI;

use rand::Rng;

use crate::bucket::day_of_week;
use crate::rng::{phase, substream};
use crate::tempgraph::{normalize, Edge, Snapshot, TemporalGraph};

/// 2024-01-01 00:00 UTC, a Monday.
pub const MONDAY_EPOCH: i64 = 1_704_067_200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivitySpec {
    pub nodes: usize,
    pub snapshots: usize,
    pub gap: u64,
    pub epoch: i64,
    /// Probability that a contact continues into the next snapshot.
    pub persistence: f64,
    pub seed: u64,
}

/// Builds a network whose expected number of new contacts in the snapshot
/// starting at wall-clock `secs` is `rate(secs)`.
pub fn activity_driven(spec: &ActivitySpec, rate: impl Fn(i64) -> f64) -> TemporalGraph {
    let n = spec.nodes;
    let pairs = (n * (n - 1) / 2) as f64;
    let mut rng = substream(spec.seed, &[phase::SYNTHETIC]);
    let mut previous: Vec<Edge> = Vec::new();
    let mut snapshots = Vec::with_capacity(spec.snapshots);
    for t in 0..spec.snapshots {
        let secs = spec.epoch + t as i64 * spec.gap as i64;
        let p_new = (rate(secs) / pairs).clamp(0.0, 1.0);
        let mut edges: Vec<Edge> = previous.iter().copied().filter(|_| rng.gen_bool(spec.persistence)).collect();
        if p_new > 0.0 {
            // geometric skipping over the pair index space
            let mut idx: f64 = -1.0;
            let log_q = (1.0 - p_new).ln();
            loop {
                let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                idx += if p_new >= 1.0 { 1.0 } else { (u.ln() / log_q).floor() + 1.0 };
                if idx >= pairs {
                    break;
                }
                edges.push(pair_at(idx as usize, n));
            }
        }
        let snap = Snapshot::from_edges(n, edges).expect("pairs lie in range");
        previous = snap.edges().to_vec();
        snapshots.push(snap);
    }
    TemporalGraph::new(n, snapshots, spec.gap, spec.epoch).expect("valid gap")
}

/// Unordered pair number `idx` in row-major upper-triangle order.
fn pair_at(idx: usize, n: usize) -> Edge {
    let mut row = 0usize;
    let mut remaining = idx;
    while remaining >= n - 1 - row {
        remaining -= n - 1 - row;
        row += 1;
    }
    normalize(row as u32, (row + 1 + remaining) as u32)
}

/// Day/night cycle: the rate swings between `night` (at midnight) and `day`
/// (at noon) along a cosine.
pub fn daily_sinusoid(spec: &ActivitySpec, night: f64, day: f64) -> TemporalGraph {
    activity_driven(spec, |secs| {
        let phase = secs.rem_euclid(86_400) as f64 / 86_400.0;
        night + (day - night) * 0.5 * (1.0 - (2.0 * PI * phase).cos())
    })
}

/// Office-hours pattern: `weekday` new contacts per snapshot between 08:00
/// and 18:00 Monday–Friday, `weekend` during the same hours on weekends, and
/// `night` otherwise.
pub fn weekly_office(spec: &ActivitySpec, weekday: f64, weekend: f64, night: f64) -> TemporalGraph {
    activity_driven(spec, |secs| {
        let hour = secs.rem_euclid(86_400) / 3600;
        if !(8..18).contains(&hour) {
            night
        } else if day_of_week(secs) >= 5 {
            weekend
        } else {
            weekday
        }
    })
}
