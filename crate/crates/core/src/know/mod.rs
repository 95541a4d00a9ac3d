//! Slow-cadence generators: self-portrait, profile triad, architecture
//! scout, and partner-claim extraction.

mod claims;
mod portrait;
mod scout;
mod triad;

use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use serde_json::{json, Value};

pub use claims::{claims_in, dimension_counts, extract_claims, normalise_claim, Dimension, PartnerClaim};
pub use portrait::{generate_self_portrait, portrait_path};
pub use scout::{
    digest_for_week, load_corpus, parse_corpus, parse_digest, render_digest, run_scout, situate, Proposal, ScoutDigest,
    ScoutFinding, ScoutRun, SourceItem, MODULES,
};
pub use triad::{
    delta_path, generate_delta, generate_profile, profile_dimension_counts, profile_path, triad_paths, DeltaOutcome,
    Subject,
};

use crate::gateway::Completion;
use crate::vault::{streams, Author, LogRecord, MarkdownDoc, ReadWindow};
use crate::week::{IsoWeek, WeekRange};
use crate::{Harness, Result};

/// The weekly Know anchor: Sunday 03:04 UTC of `week`.
pub fn know_anchor(week: IsoWeek) -> DateTime<Utc> {
    week.sunday().and_hms_opt(3, 4, 0).expect("valid time").and_utc()
}

/// A week is closed for Know purposes once its anchor has passed.
pub fn week_closed(week: IsoWeek, now: DateTime<Utc>) -> bool {
    now >= know_anchor(week)
}

/// Most recent week whose anchor is at or before `now`.
pub fn last_closed_week(now: DateTime<Utc>) -> IsoWeek {
    let w = IsoWeek::of(now);
    if week_closed(w, now) {
        w
    } else {
        w.prev()
    }
}

/// Next anchor strictly after `now`.
pub fn next_anchor(now: DateTime<Utc>) -> DateTime<Utc> {
    let a = know_anchor(IsoWeek::of(now));
    if a > now {
        a
    } else {
        know_anchor(IsoWeek::of(now + Duration::days(7)))
    }
}

pub(crate) fn cite(path: &Path) -> String {
    format!("- [[{}]]\n", path.display())
}

/// Human and agent message records of a week.
pub(crate) fn interactions_in_week(h: &Harness, week: IsoWeek) -> Result<Vec<LogRecord>> {
    Ok(h.vault
        .read_stream(streams::INTERACTIONS, ReadWindow::weeks(WeekRange::single(week)))?
        .records
        .into_iter()
        .filter(|r| matches!(r.str_field("event"), Some("human_message" | "agent_message")))
        .collect())
}

/// Provenance for an agent-initiated change to one of its own self-models.
pub(crate) fn record_self_model_update(h: &Harness, week: IsoWeek, what: &str, path: &Path, extra: Value) -> Result<()> {
    let mut payload = json!({
        "event": "self_model_update",
        "interaction_id": format!("know-{week}-{what}"),
        "doc": path.display().to_string(),
        "trigger": "know_schedule",
    });
    if let (Some(p), Value::Object(x)) = (payload.as_object_mut(), extra) {
        p.extend(x);
    }
    h.vault.append_record(streams::INTERACTIONS, Author::Agent, payload, None)?;
    Ok(())
}

/// Record which model wrote a document and whether it was cut short.
pub(crate) fn stamp(h: &Harness, mut doc: MarkdownDoc, completion: &Completion) -> MarkdownDoc {
    if let Some(m) = h.recorded_model(completion) {
        doc.set("model_id", m);
    }
    if completion.truncated {
        doc.set("truncated", true);
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::parse_ts;

    #[test]
    fn anchor_is_sunday_morning() {
        let w: IsoWeek = "2026-W18".parse().unwrap();
        assert_eq!(know_anchor(w), parse_ts("2026-05-03T03:04:00Z").unwrap());
        assert!(!week_closed(w, parse_ts("2026-05-03T03:03:59Z").unwrap()));
        assert!(week_closed(w, parse_ts("2026-05-03T03:04:00Z").unwrap()));
        assert_eq!(last_closed_week(parse_ts("2026-05-02T12:00:00Z").unwrap()), w.prev());
        assert_eq!(next_anchor(parse_ts("2026-05-03T03:04:00Z").unwrap()), parse_ts("2026-05-10T03:04:00Z").unwrap());
    }
}
