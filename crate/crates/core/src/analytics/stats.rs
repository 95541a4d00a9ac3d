//! Trace statistics over the archetype and interaction streams.

use std::collections::BTreeMap;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::vault::{streams, LogRecord, ReadWindow, Vault};
use crate::week::{IsoWeek, WeekRange};
use crate::{Error, Result};

/// Shannon entropy in bits of a count vector. Zero counts contribute nothing.
pub fn entropy_bits<I: IntoIterator<Item = u64>>(counts: I) -> f64 {
    let counts: Vec<u64> = counts.into_iter().filter(|&c| c > 0).collect();
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum();
    // -0.0 for a single category
    h.max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyPoint {
    pub week: IsoWeek,
    pub entropy_bits: f64,
    pub event_count: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EntropySeries {
    pub points: Vec<EntropyPoint>,
}

impl EntropySeries {
    pub fn get(&self, week: IsoWeek) -> Option<&EntropyPoint> {
        self.points.iter().find(|p| p.week == week)
    }

    /// Relative drop from the first to the second week's entropy.
    pub fn reduction(&self, from: IsoWeek, to: IsoWeek) -> Option<f64> {
        let a = self.get(from)?.entropy_bits;
        let b = self.get(to)?.entropy_bits;
        (a > 0.0).then(|| (a - b) / a)
    }
}

/// Per-week archetype counts of invocation records.
pub fn weekly_counts(records: &[LogRecord]) -> BTreeMap<IsoWeek, BTreeMap<String, u64>> {
    let mut out: BTreeMap<IsoWeek, BTreeMap<String, u64>> = BTreeMap::new();
    for r in records {
        if let Some(a) = r.str_field("archetype") {
            *out.entry(IsoWeek::of(r.ts)).or_default().entry(a.to_string()).or_default() += 1;
        }
    }
    out
}

/// Entropy per week over `range`; weeks without events are omitted.
pub fn entropy_series(records: &[LogRecord], range: Option<WeekRange>) -> EntropySeries {
    let points = weekly_counts(records)
        .into_iter()
        .filter(|(w, _)| range.is_none_or(|r| r.contains(*w)))
        .map(|(week, counts)| EntropyPoint {
            week,
            entropy_bits: entropy_bits(counts.values().copied()),
            event_count: counts.values().sum(),
        })
        .filter(|p| p.event_count > 0)
        .collect();
    EntropySeries { points }
}

pub fn weekly_entropy(vault: &Vault, range: Option<WeekRange>) -> Result<EntropySeries> {
    let window = range.map(ReadWindow::weeks).unwrap_or(ReadWindow::All);
    let read = vault.read_stream(streams::ARCHETYPE_LOG, window)?;
    Ok(entropy_series(&read.records, range))
}

/// Fraction of invocations whose archetype is in `subset` (case-insensitive).
pub fn archetype_share(records: &[LogRecord], subset: &[&str]) -> Result<f64> {
    let named: Vec<&str> = records.iter().filter_map(|r| r.str_field("archetype")).collect();
    if named.is_empty() {
        return Err(Error::Precondition("no archetype events in range".into()));
    }
    let hit = named
        .iter()
        .filter(|a| subset.iter().any(|s| s.eq_ignore_ascii_case(a)))
        .count();
    Ok(hit as f64 / named.len() as f64)
}

pub fn archetype_share_in(vault: &Vault, window: ReadWindow, subset: &[&str]) -> Result<f64> {
    let read = vault.read_stream(streams::ARCHETYPE_LOG, window)?;
    archetype_share(&read.records, subset)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateWindow {
    pub first_day: NaiveDate,
    pub last_day: NaiveDate,
    pub days: i64,
    pub count: usize,
    /// Events per day, rounded to two decimals.
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateComparison {
    pub boundary: DateTime<Utc>,
    pub pre: RateWindow,
    pub post: RateWindow,
    /// |pre - post| / max(pre, post), over the rounded rates.
    pub rel_diff: f64,
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Compare event rates either side of a boundary.
///
/// The pre window runs from the first event's day up to the day before the
/// boundary; the post window from the boundary's day through the last
/// event's day. Both counts are whole calendar days.
pub fn rate_counterfactual(timestamps: &[DateTime<Utc>], boundary: DateTime<Utc>) -> Result<RateComparison> {
    let (pre, post): (Vec<&DateTime<Utc>>, Vec<&DateTime<Utc>>) = timestamps.iter().partition(|t| **t < boundary);
    let (Some(&first), Some(&last)) = (pre.iter().min(), post.iter().max()) else {
        return Err(Error::Precondition("rate comparison needs events on both sides of the boundary".into()));
    };
    let b = boundary.date_naive();
    let pre_days = (b - first.date_naive()).num_days().max(1);
    let post_days = (last.date_naive() - b).num_days() + 1;
    let window = |first_day: NaiveDate, last_day: NaiveDate, days: i64, count: usize| RateWindow {
        first_day,
        last_day,
        days,
        count,
        rate: round2(count as f64 / days as f64),
    };
    let pre = window(first.date_naive(), b.pred_opt().unwrap_or(b), pre_days, pre.len());
    let post = window(b, last.date_naive(), post_days, post.len());
    let hi = pre.rate.max(post.rate);
    let rel_diff = if hi == 0.0 { 0.0 } else { (pre.rate - post.rate).abs() / hi };
    Ok(RateComparison {
        boundary,
        pre,
        post,
        rel_diff,
    })
}

/// Human message timestamps: one per interaction.
pub fn interaction_times(vault: &Vault) -> Result<Vec<DateTime<Utc>>> {
    Ok(vault
        .records(streams::INTERACTIONS)?
        .into_iter()
        .filter(|r| r.str_field("event") == Some("human_message"))
        .map(|r| r.ts)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn degenerate_and_binary() {
        assert_eq!(entropy_bits([7]), 0.0);
        assert!((entropy_bits([2, 2]) - 1.0).abs() < 1e-12);
        assert_eq!(entropy_bits([]), 0.0);
    }

    #[test]
    fn uniform_six() {
        let direct: f64 = (0..6).map(|_| -(1.0f64 / 6.0) * (1.0f64 / 6.0).log2()).sum();
        assert!((entropy_bits([5; 6]) - direct).abs() < 1e-12);
        assert!((entropy_bits([5; 6]) - 2.585).abs() < 0.001);
    }

    #[test]
    fn rate_windows_count_whole_days() {
        let ts = |s: &str| crate::clock::parse_ts(s).unwrap();
        let mut t = vec![ts("2026-03-10T09:00:00Z"); 221];
        t.extend(vec![ts("2026-05-19T09:00:00Z"); 193]);
        let r = rate_counterfactual(&t, ts("2026-04-18T00:00:00Z")).unwrap();
        assert_eq!((r.pre.days, r.post.days), (39, 32));
        assert_eq!((r.pre.rate, r.post.rate), (5.67, 6.03));
        assert!(r.rel_diff <= 0.06);
    }

    #[test]
    fn empty_side_is_an_error() {
        let t = [crate::clock::parse_ts("2026-03-10T09:00:00Z").unwrap()];
        assert!(rate_counterfactual(&t, t[0] + chrono::Duration::days(1)).is_err());
    }

    proptest! {
        #[test]
        fn bounded_and_permutation_invariant(mut counts in proptest::collection::vec(0u64..50, 1..7)) {
            let h = entropy_bits(counts.clone());
            let nonzero = counts.iter().filter(|&&c| c > 0).count();
            prop_assert!(h >= 0.0);
            if nonzero > 0 {
                prop_assert!(h <= (nonzero as f64).log2() + 1e-9);
            }
            prop_assert_eq!(h == 0.0, nonzero <= 1);
            counts.reverse();
            prop_assert!((entropy_bits(counts) - h).abs() < 1e-12);
        }
    }
}
