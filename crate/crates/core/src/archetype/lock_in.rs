use std::collections::BTreeMap;

use serde::Serialize;

use crate::week::{IsoWeek, WeekRange};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeekCounts {
    pub week: IsoWeek,
    pub counts: BTreeMap<String, u64>,
}

impl WeekCounts {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Share per archetype; empty for a week without events.
    pub fn shares(&self) -> BTreeMap<String, f64> {
        let total = self.total();
        if total == 0 {
            return BTreeMap::new();
        }
        self.counts
            .iter()
            .map(|(k, v)| (k.clone(), *v as f64 / total as f64))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LockInReport {
    pub window: Option<WeekRange>,
    /// Archetype with the highest average weekly share, over active weeks.
    pub dominant: Option<(String, f64)>,
    /// Archetypes with at least `starvation_weeks` consecutive active weeks
    /// of zero invocations, with the length of their longest such run.
    pub starved: Vec<(String, u32)>,
    pub triggered: bool,
}

/// FM3 check. Weeks with no events at all are skipped: they say nothing
/// about balance.
pub fn detect_lock_in(
    series: &[WeekCounts],
    invocable: &[String],
    dominance_threshold: f64,
    starvation_weeks: u32,
) -> LockInReport {
    let window = match (series.first(), series.last()) {
        (Some(a), Some(b)) => Some(WeekRange::new(a.week, b.week)),
        _ => None,
    };
    let active: Vec<&WeekCounts> = series.iter().filter(|w| w.total() > 0).collect();

    let mut dominant: Option<(String, f64)> = None;
    if !active.is_empty() {
        for name in invocable {
            let avg = active
                .iter()
                .map(|w| w.shares().get(name).copied().unwrap_or(0.0))
                .sum::<f64>()
                / active.len() as f64;
            if dominant.as_ref().is_none_or(|(_, best)| avg > *best) {
                dominant = Some((name.clone(), avg));
            }
        }
    }

    let mut starved = Vec::new();
    for name in invocable {
        let (mut run, mut longest) = (0u32, 0u32);
        for w in &active {
            if w.counts.get(name).copied().unwrap_or(0) == 0 {
                run += 1;
                longest = longest.max(run);
            } else {
                run = 0;
            }
        }
        if longest >= starvation_weeks.max(1) {
            starved.push((name.clone(), longest));
        }
    }

    let dominates = dominant
        .as_ref()
        .is_some_and(|(_, share)| *share >= dominance_threshold);
    LockInReport {
        window,
        triggered: dominates && !starved.is_empty(),
        dominant,
        starved,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        ["Ariadne", "Beatrice", "Daimon", "Muse", "Musubi", "Psyche"]
            .map(String::from)
            .to_vec()
    }

    fn week(w: u32, counts: [u64; 6]) -> WeekCounts {
        WeekCounts {
            week: IsoWeek::new(2026, w).unwrap(),
            counts: names().into_iter().zip(counts).collect(),
        }
    }

    #[test]
    fn uniform_is_not_lock_in() {
        let s: Vec<_> = (17..=21).map(|w| week(w, [5; 6])).collect();
        let r = detect_lock_in(&s, &names(), 0.40, 2);
        assert!(!r.triggered);
        assert!(r.starved.is_empty());
    }

    #[test]
    fn single_week_dominance_is_not_enough() {
        let s = vec![week(18, [0, 9, 0, 1, 0, 0])];
        let r = detect_lock_in(&s, &names(), 0.40, 2);
        assert!(r.dominant.unwrap().1 >= 0.4);
        assert!(!r.triggered);
    }

    #[test]
    fn empty_weeks_do_not_count_as_starvation() {
        let s = vec![
            week(17, [0, 5, 1, 1, 1, 1]),
            week(18, [0; 6]),
            week(19, [1, 5, 1, 1, 1, 1]),
        ];
        let r = detect_lock_in(&s, &names(), 0.40, 2);
        assert!(r.starved.is_empty());
    }

    #[test]
    fn shares_sum_to_one() {
        let w = week(18, [2, 21, 2, 15, 9, 1]);
        let sum: f64 = w.shares().values().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
}
