//! Wall-clock buckets owning separate neighborhood tables.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::tempgraph::TemporalGraph;

const DAY: i64 = 86_400;
const HOUR: i64 = 3_600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Periodicity {
    Daily,
    Weekly,
}

impl fmt::Display for Periodicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Periodicity::Daily => "daily",
            Periodicity::Weekly => "weekly",
        })
    }
}

impl FromStr for Periodicity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "daily" => Ok(Periodicity::Daily),
            "weekly" => Ok(Periodicity::Weekly),
            other => Err(format!("unknown periodicity {other:?}")),
        }
    }
}

/// Hour-of-day slot, optionally refined by day of week (0 = Monday).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BucketKey {
    pub day: Option<u8>,
    pub hour: u8,
}

impl BucketKey {
    pub fn daily(hour: u8) -> Self {
        BucketKey { day: None, hour }
    }

    pub fn weekly(day: u8, hour: u8) -> Self {
        BucketKey { day: Some(day), hour }
    }

    /// Bucket of a UTC timestamp in seconds.
    pub fn of_time(secs: i64, periodicity: Periodicity) -> Self {
        let hour = (secs.rem_euclid(DAY) / HOUR) as u8;
        match periodicity {
            Periodicity::Daily => BucketKey::daily(hour),
            Periodicity::Weekly => BucketKey::weekly(day_of_week(secs), hour),
        }
    }
}

/// 0 = Monday .. 6 = Sunday. The Unix epoch fell on a Thursday.
pub fn day_of_week(secs: i64) -> u8 {
    (secs.div_euclid(DAY) + 3).rem_euclid(7) as u8
}

impl fmt::Display for BucketKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.day {
            Some(d) => write!(f, "d{d}h{:02}", self.hour),
            None => write!(f, "h{:02}", self.hour),
        }
    }
}

impl FromStr for BucketKey {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("bad bucket {s:?}");
        let (day, rest) = match s.strip_prefix('d') {
            Some(rest) => {
                let (d, h) = rest.split_once('h').ok_or_else(bad)?;
                (Some(d.parse::<u8>().map_err(|_| bad())?), h)
            }
            None => (None, s.strip_prefix('h').ok_or_else(bad)?),
        };
        let hour: u8 = rest.parse().map_err(|_| bad())?;
        if hour > 23 || day.is_some_and(|d| d > 6) {
            return Err(bad());
        }
        Ok(BucketKey { day, hour })
    }
}

/// Maps snapshot indices to buckets for a given wall-clock alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bucketing {
    pub periodicity: Periodicity,
    pub epoch: i64,
    pub gap: u64,
}

impl Bucketing {
    pub fn new(periodicity: Periodicity, epoch: i64, gap: u64) -> Self {
        Bucketing { periodicity, epoch, gap }
    }

    pub fn for_graph(g: &TemporalGraph, periodicity: Periodicity) -> Self {
        Bucketing::new(periodicity, g.epoch(), g.gap())
    }

    pub fn key(&self, t: usize) -> BucketKey {
        BucketKey::of_time(self.epoch + t as i64 * self.gap as i64, self.periodicity)
    }
}

/// Weekly when the active snapshots cover at least six distinct days and one
/// of them falls on a weekend; daily otherwise.
pub fn auto_periodicity(g: &TemporalGraph) -> Periodicity {
    let mut days: Vec<i64> = (0..g.len())
        .filter(|&t| g.snapshot(t).edge_count() > 0)
        .map(|t| g.time_of(t).div_euclid(DAY))
        .collect();
    days.dedup();
    days.sort_unstable();
    days.dedup();
    let weekend = days.iter().any(|&d| day_of_week(d * DAY) >= 5);
    if days.len() >= 6 && weekend {
        Periodicity::Weekly
    } else {
        Periodicity::Daily
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // 2024-01-01 00:00 UTC, a Monday.
    const MONDAY: i64 = 1_704_067_200;

    #[test]
    fn weekday_and_hour() {
        assert_eq!(day_of_week(0), 3);
        assert_eq!(day_of_week(MONDAY), 0);
        assert_eq!(day_of_week(MONDAY + 6 * DAY + 10), 6);
        let k = BucketKey::of_time(MONDAY + 8 * HOUR + 59, Periodicity::Weekly);
        assert_eq!(k, BucketKey::weekly(0, 8));
        assert_eq!(BucketKey::of_time(MONDAY + 8 * HOUR, Periodicity::Daily), BucketKey::daily(8));
        assert_eq!(BucketKey::of_time(-1, Periodicity::Daily), BucketKey::daily(23));
    }

    #[test]
    fn text_form_round_trips() {
        for key in [BucketKey::daily(0), BucketKey::daily(23), BucketKey::weekly(6, 7)] {
            assert_eq!(key.to_string().parse::<BucketKey>().unwrap(), key);
        }
        assert_eq!(BucketKey::weekly(2, 5).to_string(), "d2h05");
        assert!("h24".parse::<BucketKey>().is_err());
        assert!("d7h01".parse::<BucketKey>().is_err());
        assert!("x".parse::<BucketKey>().is_err());
    }

    #[test]
    fn auto_selection() {
        let day_layers = |days: usize| -> TemporalGraph {
            let layers: Vec<Vec<(u32, u32)>> = (0..days * 24).map(|_| vec![(0, 1)]).collect();
            TemporalGraph::from_layers(2, &layers, 3600, MONDAY).unwrap()
        };
        assert_eq!(auto_periodicity(&day_layers(5)), Periodicity::Daily);
        assert_eq!(auto_periodicity(&day_layers(7)), Periodicity::Weekly);
    }
}
