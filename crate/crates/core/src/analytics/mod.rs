//! Read-only analytics over a vault: trace statistics, audits and the
//! conformance check. Same vault bytes in, same numbers out.

mod conformance;
mod honesty;
mod kappa;
mod reducibility;
mod stats;
pub mod text;
mod uptake;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use conformance::{conformance_check, references, ConditionResult, ConformanceParams, ConformanceReport};
pub use honesty::{honesty_audit, ols_slope, weekly_mean_scores, HonestyFinding, HonestyReport};
pub use kappa::{cohen_kappa, KappaResult};
pub use reducibility::{delta_reducibility, reducibility, section, Reducibility, DELTA_SECTIONS};
pub use stats::{
    archetype_share, archetype_share_in, entropy_bits, entropy_series, interaction_times, rate_counterfactual,
    weekly_counts, weekly_entropy, EntropyPoint, EntropySeries, RateComparison, RateWindow,
};
pub use uptake::{collect_items, detect_uptake, detect_uptake_in, swap_authors, Stage, TextItem, UptakeChain, UptakeParams};

use crate::archetype::{detect_lock_in, distribution_series, LockInReport};
use crate::reflexion::verdicts;
use crate::vault::streams;
use crate::week::WeekRange;
use crate::{Harness, Result};

impl From<&crate::Settings> for ConformanceParams {
    fn from(s: &crate::Settings) -> Self {
        ConformanceParams {
            continuity_days: s.continuity_days,
            reducibility_threshold: s.reducibility_threshold,
        }
    }
}

impl From<&crate::Settings> for UptakeParams {
    fn from(s: &crate::Settings) -> Self {
        UptakeParams {
            min_ngram: s.min_ngram,
            reuse_min_days: s.reuse_min_days,
        }
    }
}

pub fn conformance(h: &Harness) -> Result<ConformanceReport> {
    conformance_check(&h.vault, &(&h.settings).into())
}

pub fn honesty(h: &Harness, window: Option<WeekRange>) -> Result<HonestyReport> {
    let scores = h.vault.records(streams::CONSTITUTION_SCORES)?;
    Ok(honesty_audit(&verdicts(h)?, &scores, window, h.settings.min_pairs))
}

pub fn uptake(h: &Harness) -> Result<Vec<UptakeChain>> {
    detect_uptake_in(&h.vault, (&h.settings).into())
}

pub fn lock_in(h: &Harness, range: Option<WeekRange>) -> Result<LockInReport> {
    let range = match range {
        Some(r) => Some(r),
        None => {
            let s = entropy_series(&h.vault.records(streams::ARCHETYPE_LOG)?, None);
            s.points.first().zip(s.points.last()).map(|(a, b)| WeekRange::new(a.week, b.week))
        }
    };
    let series = match range {
        Some(r) => distribution_series(&h.vault, &h.registry, r)?,
        None => Vec::new(),
    };
    Ok(detect_lock_in(
        &series,
        &h.registry.invocable_names(),
        h.settings.dominance_threshold,
        h.settings.starvation_weeks,
    ))
}

/// Everything the `report` command prints.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceReport {
    pub entropy: EntropySeries,
    pub lock_in: serde_json::Value,
    pub honesty: HonestyReport,
    pub uptake: Vec<UptakeChain>,
    pub conformance: ConformanceReport,
}

pub fn trace_report(h: &Harness) -> Result<TraceReport> {
    Ok(TraceReport {
        entropy: weekly_entropy(&h.vault, None)?,
        lock_in: serde_json::to_value(lock_in(h, None)?).unwrap_or_default(),
        honesty: honesty(h, None)?,
        uptake: uptake(h)?,
        conformance: conformance(h)?,
    })
}

impl TraceReport {
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Trace report\n\n## Archetype entropy\n\n| week | bits | events |\n|---|---|---|\n");
        for p in &self.entropy.points {
            let _ = writeln!(out, "| {} | {:.2} | {} |", p.week, p.entropy_bits, p.event_count);
        }
        let _ = writeln!(
            out,
            "\n## Lock-in\n\ntriggered: {}\n",
            self.lock_in.get("triggered").and_then(|v| v.as_bool()).unwrap_or(false)
        );
        let _ = writeln!(out, "## Validator honesty\n\n{} verdicts, {} findings", self.honesty.verdicts, self.honesty.findings.len());
        for (a, n) in &self.honesty.counts {
            let _ = writeln!(out, "- {a}: {n}");
        }
        let complete = self.uptake.iter().filter(|c| c.complete).count();
        let _ = writeln!(out, "\n## Uptake\n\n{} candidate chains, {complete} complete", self.uptake.len());
        for c in self.uptake.iter().filter(|c| c.complete) {
            let _ = writeln!(out, "- \"{}\": {} -> {}", c.novel_ngram, c.reframe.source, c.adoption.source);
        }
        out.push('\n');
        out.push_str(&self.conformance.to_markdown().replacen("# Conformance", "## Conformance", 1).replace("\n## C", "\n### C"));
        out
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditKind {
    Conformance,
    Honesty,
    Uptake,
    Entropy,
}

impl AuditKind {
    pub const ALL: [AuditKind; 4] = [AuditKind::Conformance, AuditKind::Honesty, AuditKind::Uptake, AuditKind::Entropy];
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditResult {
    pub kind: AuditKind,
    pub passed: bool,
    pub summary: String,
    pub detail: serde_json::Value,
}

/// Run the requested audits. Pass rules: conformance needs all six
/// conditions; honesty needs zero findings; uptake needs one complete
/// chain; entropy fails when lock-in is triggered.
pub fn run_audits(h: &Harness, kinds: &[AuditKind]) -> Result<Vec<AuditResult>> {
    let mut out = Vec::new();
    for &kind in kinds {
        let (passed, summary, detail) = match kind {
            AuditKind::Conformance => {
                let r = conformance(h)?;
                let mut s = format!("{}/6 conditions pass", r.passed());
                if !r.overall {
                    let _ = write!(s, "; failing {}", r.failing().join(", "));
                }
                (r.overall, s, serde_json::to_value(&r))
            }
            AuditKind::Honesty => {
                let r = honesty(h, None)?;
                let s = format!("{} verdicts, {} findings", r.verdicts, r.findings.len());
                (r.passed(), s, serde_json::to_value(&r))
            }
            AuditKind::Uptake => {
                let chains = uptake(h)?;
                let complete = chains.iter().filter(|c| c.complete).count();
                let s = format!("{} candidate chains, {complete} complete", chains.len());
                (complete > 0, s, serde_json::to_value(&chains))
            }
            AuditKind::Entropy => {
                let series = weekly_entropy(&h.vault, None)?;
                let lock = lock_in(h, None)?;
                let mut s = series
                    .points
                    .iter()
                    .map(|p| format!("{} {:.2}", p.week, p.entropy_bits))
                    .collect::<Vec<_>>()
                    .join(", ");
                if s.is_empty() {
                    s = "no archetype events".into();
                }
                if lock.triggered {
                    let starved: Vec<&str> = lock.starved.iter().map(|(n, _)| n.as_str()).collect();
                    let _ = write!(s, "; lock-in: {} dominant, starved {}", lock.dominant.as_ref().map_or("-", |d| d.0.as_str()), starved.join(", "));
                }
                (
                    !lock.triggered,
                    s,
                    serde_json::to_value(serde_json::json!({"entropy": series, "lock_in": lock})),
                )
            }
        };
        out.push(AuditResult {
            kind,
            passed,
            summary,
            detail: detail.unwrap_or_default(),
        });
    }
    Ok(out)
}
