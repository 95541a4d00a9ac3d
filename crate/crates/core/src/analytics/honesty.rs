//! Does the validator ever claim more than its data supports?

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::reflexion::{Assessment, ImproveEpisode};
use crate::vault::LogRecord;
use crate::week::{IsoWeek, WeekRange};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HonestyFinding {
    /// A positive verdict resting on fewer paired samples than required.
    UnderpoweredPositive {
        run_id: String,
        paired_samples: u32,
        min_pairs: u32,
    },
    /// Every verdict in the window is positive while scores are not rising.
    PositiveWithoutTrend {
        window: WeekRange,
        verdicts: usize,
        /// Least-squares slope of weekly mean scores; `None` with under two weeks of scores.
        slope: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HonestyReport {
    pub window: Option<WeekRange>,
    pub verdicts: usize,
    pub counts: BTreeMap<Assessment, usize>,
    pub findings: Vec<HonestyFinding>,
}

impl HonestyReport {
    pub fn passed(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Mean first-order score per week from constitution-score rows.
pub fn weekly_mean_scores(rows: &[LogRecord]) -> BTreeMap<IsoWeek, f64> {
    let mut acc: BTreeMap<IsoWeek, (i64, i64)> = BTreeMap::new();
    for r in rows {
        if let Some(s) = r.i64_field("score") {
            let e = acc.entry(IsoWeek::of(r.ts)).or_default();
            e.0 += s;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(w, (s, n))| (w, s as f64 / n as f64)).collect()
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn week_index(first: IsoWeek, w: IsoWeek) -> f64 {
    (w.monday() - first.monday()).num_weeks() as f64
}

pub fn honesty_audit(
    verdicts: &[(DateTime<Utc>, ImproveEpisode)],
    score_rows: &[LogRecord],
    window: Option<WeekRange>,
    min_pairs: u32,
) -> HonestyReport {
    let in_window = |ts: DateTime<Utc>| window.is_none_or(|r| r.contains(IsoWeek::of(ts)));
    let selected: Vec<&ImproveEpisode> = verdicts.iter().filter(|(ts, _)| in_window(*ts)).map(|(_, v)| v).collect();
    let mut counts = BTreeMap::new();
    let mut findings = Vec::new();
    for v in &selected {
        *counts.entry(v.assessment).or_default() += 1;
        if v.assessment == Assessment::Improved && v.paired_samples < min_pairs {
            findings.push(HonestyFinding::UnderpoweredPositive {
                run_id: v.run_id.clone(),
                paired_samples: v.paired_samples,
                min_pairs,
            });
        }
    }
    if !selected.is_empty() && selected.iter().all(|v| v.assessment == Assessment::Improved) {
        let rows: Vec<LogRecord> = score_rows.iter().filter(|r| in_window(r.ts)).cloned().collect();
        let means = weekly_mean_scores(&rows);
        let slope = means.keys().next().and_then(|&first| {
            let pts: Vec<(f64, f64)> = means.iter().map(|(w, m)| (week_index(first, *w), *m)).collect();
            ols_slope(&pts)
        });
        if slope.is_none_or(|s| s <= 0.0) {
            let span = window.unwrap_or_else(|| {
                let first = verdicts.iter().map(|(t, _)| IsoWeek::of(*t)).min().expect("non-empty");
                let last = verdicts.iter().map(|(t, _)| IsoWeek::of(*t)).max().expect("non-empty");
                WeekRange::new(first, last)
            });
            findings.push(HonestyFinding::PositiveWithoutTrend {
                window: span,
                verdicts: selected.len(),
                slope,
            });
        }
    }
    HonestyReport {
        window,
        verdicts: selected.len(),
        counts,
        findings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ep(run: &str, paired: u32, a: Assessment) -> ImproveEpisode {
        ImproveEpisode {
            run_id: run.into(),
            skill_id: "s".into(),
            before_metric: None,
            after_metric: None,
            paired_samples: paired,
            delta: 0.0,
            assessment: a,
        }
    }

    #[test]
    fn slope_of_line() {
        let s = ols_slope(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
        assert_eq!(ols_slope(&[(0.0, 1.0)]), None);
    }

    #[test]
    fn underpowered_positive_flagged_once() {
        let t = crate::clock::parse_ts("2026-05-01T00:00:00Z").unwrap();
        let v = vec![
            (t, ep("run-0000", 0, Assessment::InsufficientData)),
            (t, ep("run-0001", 0, Assessment::Improved)),
        ];
        let r = honesty_audit(&v, &[], None, 5);
        assert_eq!(r.findings.len(), 1);
    }

    #[test]
    fn honest_nulls_pass() {
        let t = crate::clock::parse_ts("2026-05-01T00:00:00Z").unwrap();
        let v: Vec<_> = (0..41).map(|i| (t, ep(&format!("run-{i:04}"), 0, Assessment::InsufficientData))).collect();
        assert!(honesty_audit(&v, &[], None, 5).passed());
    }
}
