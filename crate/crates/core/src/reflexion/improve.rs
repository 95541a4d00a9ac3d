use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::scoring::{round2, unfence};
use super::skills::{load_skill, Skill};
use crate::gateway::{CompletionRequest, Depth, Message};
use crate::vault::{streams, Author, LogRecord};
use crate::{Error, Harness, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assessment {
    Improved,
    Regressed,
    NoChange,
    InsufficientData,
}

impl Assessment {
    pub const ALL: [Assessment; 4] = [
        Assessment::Improved,
        Assessment::Regressed,
        Assessment::NoChange,
        Assessment::InsufficientData,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Assessment::Improved => "improved",
            Assessment::Regressed => "regressed",
            Assessment::NoChange => "no_change",
            Assessment::InsufficientData => "insufficient_data",
        }
    }
}

impl fmt::Display for Assessment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImproveEpisode {
    pub run_id: String,
    pub skill_id: String,
    pub before_metric: Option<f64>,
    pub after_metric: Option<f64>,
    pub paired_samples: u32,
    /// Percentage points, two decimals.
    pub delta: f64,
    pub assessment: Assessment,
}

/// The validator's whole decision rule.
///
/// Below `min_pairs` paired samples, or with either side missing, the answer
/// is `insufficient_data` with a delta of exactly zero. Otherwise the delta
/// is taken between the two effectiveness figures expressed as percentages
/// rounded to two decimals.
pub fn assess(before: Option<f64>, after: Option<f64>, paired: u32, min_pairs: u32) -> (f64, Assessment) {
    let (Some(b), Some(a)) = (before, after) else {
        return (0.0, Assessment::InsufficientData);
    };
    if paired < min_pairs {
        return (0.0, Assessment::InsufficientData);
    }
    let delta = round2(round2(a * 100.0) - round2(b * 100.0));
    if delta.abs() < 0.005 {
        (0.0, Assessment::NoChange)
    } else if delta > 0.0 {
        (delta, Assessment::Improved)
    } else {
        (delta, Assessment::Regressed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkillRevision {
    pub run_id: String,
    pub skill_id: String,
    pub proposed_prompt: String,
    /// Whether the revision keeps the skill's episode history.
    pub carry_history: bool,
    pub force_reset: bool,
    pub episodes_before: u64,
    pub blocked: bool,
    pub reason: Option<String>,
}

impl SkillRevision {
    pub fn episodes_after(&self) -> u64 {
        if self.carry_history {
            self.episodes_before
        } else {
            0
        }
    }

    fn from_record(r: &LogRecord) -> Option<Self> {
        let mut v = Value::Object(r.payload.clone());
        v.as_object_mut()?.remove("event");
        serde_json::from_value(v).ok()
    }
}

fn improve_events(h: &Harness) -> Result<Vec<LogRecord>> {
    Ok(h.vault.records(streams::IMPROVE_LOG)?)
}

fn next_run_id(events: &[LogRecord]) -> String {
    let n = events
        .iter()
        .filter(|r| r.str_field("event") == Some("proposed"))
        .count();
    format!("run-{n:04}")
}

fn parse_revision(text: &str) -> (String, bool) {
    if let Ok(v) = serde_json::from_str::<Value>(unfence(text)) {
        if let Some(p) = v.get("prompt").and_then(Value::as_str) {
            let carry = v.get("carry_history").and_then(Value::as_bool).unwrap_or(true);
            return (p.to_string(), carry);
        }
    }
    (text.trim().to_string(), true)
}

/// Second-order reflexion: ask the improver for a new prompt. The result is
/// a proposal; nothing about the skill changes until it is applied.
pub fn run_improve(h: &Harness, skill_id: &str, force_reset: bool) -> Result<SkillRevision> {
    let skill = load_skill(h, skill_id)?;
    if skill.episode_count == 0 {
        return Err(Error::NoEpisodes(skill_id.to_string()));
    }
    let _lock = h
        .vault
        .try_lock(&format!("improve-{skill_id}"))?
        .ok_or_else(|| Error::ImproveInProgress(skill_id.to_string()))?;

    let epoch = skill.current_epoch();
    let summary = format!(
        "Skill `{}` has {} episodes; current epoch effectiveness {}.",
        skill.skill_id,
        skill.episode_count,
        epoch
            .effectiveness()
            .map_or("unknown".to_string(), |e| format!("{:.2}%", e * 100.0))
    );
    let req = CompletionRequest::new(
        Depth::Notice,
        "improve",
        vec![
            Message::system(
                "Rewrite the skill prompt. Reply with JSON {\"prompt\": ..., \"carry_history\": true|false}.",
            ),
            Message::human(format!("{summary}\n\nCurrent prompt:\n{}", skill.prompt_text)),
        ],
        h.settings.budgets.notice,
    )
    .with_archetype(None);
    let completion = h.complete(&req)?;
    let (prompt, carry_history) = parse_revision(&completion.text);

    let resets = !carry_history && skill.episode_count > 0;
    let blocked = resets && !force_reset;
    let reason = blocked.then(|| {
        format!(
            "applying would drop episode_count from {} to 0 without a human-authorised reset",
            skill.episode_count
        )
    });
    let events = improve_events(h)?;
    let rev = SkillRevision {
        run_id: next_run_id(&events),
        skill_id: skill_id.to_string(),
        proposed_prompt: prompt,
        carry_history,
        force_reset,
        episodes_before: skill.episode_count,
        blocked,
        reason,
    };
    let mut payload = serde_json::to_value(&rev).expect("serializable");
    payload["event"] = json!("proposed");
    h.vault
        .append_record(streams::IMPROVE_LOG, Author::Agent, payload, h.recorded_model(&completion))?;
    Ok(rev)
}

pub fn find_revision(h: &Harness, run_id: &str) -> Result<SkillRevision> {
    improve_events(h)?
        .iter()
        .filter(|r| r.str_field("event") == Some("proposed") && r.str_field("run_id") == Some(run_id))
        .find_map(SkillRevision::from_record)
        .ok_or_else(|| Error::NotFound(format!("improve run `{run_id}`")))
}

/// Apply a proposal. A history-resetting revision needs `force_reset` on
/// the proposal and leaves a human-authored reset record behind.
pub fn apply_revision(h: &Harness, run_id: &str) -> Result<Skill> {
    let rev = find_revision(h, run_id)?;
    if rev.blocked {
        return Err(Error::RevisionBlocked(run_id.to_string()));
    }
    let already = improve_events(h)?
        .iter()
        .any(|r| r.str_field("event") == Some("applied") && r.str_field("run_id") == Some(run_id));
    if already {
        return Err(Error::Conflict(format!("{run_id} already applied")));
    }
    let skill = load_skill(h, &rev.skill_id)?;
    if !rev.carry_history && skill.episode_count > 0 {
        if !rev.force_reset {
            return Err(Error::RevisionBlocked(run_id.to_string()));
        }
        h.vault.append_record(
            streams::INTERACTIONS,
            Author::Human,
            json!({
                "event": "skill_reset",
                "interaction_id": format!("reset-{run_id}"),
                "skill_id": rev.skill_id,
                "run_id": run_id,
                "episodes_dropped": skill.episode_count,
            }),
            None,
        )?;
        h.vault.append_record(
            streams::SKILL_LOG,
            Author::Agent,
            json!({"event": "reset", "skill_id": rev.skill_id, "run_id": run_id}),
            None,
        )?;
    }
    h.vault.append_record(
        streams::SKILL_LOG,
        Author::Agent,
        json!({
            "event": "revision",
            "skill_id": rev.skill_id,
            "run_id": run_id,
            "prompt": rev.proposed_prompt,
            "carry_history": rev.carry_history,
        }),
        None,
    )?;
    h.vault.append_record(
        streams::IMPROVE_LOG,
        Author::Agent,
        json!({"event": "applied", "run_id": run_id, "skill_id": rev.skill_id}),
        None,
    )?;
    load_skill(h, &rev.skill_id)
}

/// Judge a run by comparing the epoch its revision opened with the one
/// before it. Unapplied runs have no after-side and therefore no pairs.
pub fn validate_improve(h: &Harness, run_id: &str) -> Result<ImproveEpisode> {
    let rev = find_revision(h, run_id)?;
    let skill = load_skill(h, &rev.skill_id)?;
    let (before, after) = match skill.epoch_of_run(run_id) {
        Some(i) => {
            let after = &skill.epochs[i];
            let before = if after.after_reset {
                None
            } else {
                i.checked_sub(1).map(|j| &skill.epochs[j])
            };
            (before.map(|e| e.outcomes.as_slice()).unwrap_or(&[]), after.outcomes.as_slice())
        }
        None => (skill.current_epoch().outcomes.as_slice(), &[][..]),
    };
    let metric = |o: &[bool]| {
        (!o.is_empty()).then(|| o.iter().filter(|&&s| s).count() as f64 / o.len() as f64)
    };
    let paired = before.len().min(after.len()) as u32;
    let (before_metric, after_metric) = (metric(before), metric(after));
    let (delta, assessment) = assess(before_metric, after_metric, paired, h.settings.min_pairs);
    let verdict = ImproveEpisode {
        run_id: run_id.to_string(),
        skill_id: rev.skill_id,
        before_metric,
        after_metric,
        paired_samples: paired,
        delta,
        assessment,
    };
    let mut payload = serde_json::to_value(&verdict).expect("serializable");
    payload["event"] = json!("validated");
    h.vault.append_record(streams::IMPROVE_LOG, Author::Agent, payload, None)?;
    Ok(verdict)
}

/// Latest verdict per run, with the time it was written, in log order.
pub fn verdicts(h: &Harness) -> Result<Vec<(DateTime<Utc>, ImproveEpisode)>> {
    let mut latest: BTreeMap<String, (u64, DateTime<Utc>, ImproveEpisode)> = BTreeMap::new();
    for r in improve_events(h)? {
        if r.str_field("event") != Some("validated") {
            continue;
        }
        let mut v = Value::Object(r.payload.clone());
        v.as_object_mut().expect("object").remove("event");
        match serde_json::from_value::<ImproveEpisode>(v) {
            Ok(ep) => {
                latest.insert(ep.run_id.clone(), (r.seq, r.ts, ep));
            }
            Err(e) => tracing::warn!(seq = r.seq, "unreadable verdict: {e}"),
        }
    }
    let mut out: Vec<_> = latest.into_values().collect();
    out.sort_by_key(|(seq, _, _)| *seq);
    Ok(out.into_iter().map(|(_, ts, ep)| (ts, ep)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_regression_example() {
        assert_eq!(assess(Some(0.6324), Some(0.5955), 20, 5), (-3.69, Assessment::Regressed));
    }

    #[test]
    fn equal_metrics_are_no_change() {
        assert_eq!(assess(Some(0.5), Some(0.5), 9, 5), (0.0, Assessment::NoChange));
    }

    #[test]
    fn zero_pairs_are_insufficient() {
        assert_eq!(assess(Some(0.9), None, 0, 5), (0.0, Assessment::InsufficientData));
        assert_eq!(assess(Some(0.1), Some(0.9), 4, 5), (0.0, Assessment::InsufficientData));
    }

    #[test]
    fn revision_text_forms() {
        assert_eq!(parse_revision("Be brief."), ("Be brief.".to_string(), true));
        assert_eq!(
            parse_revision(r#"{"prompt": "Start over.", "carry_history": false}"#),
            ("Start over.".to_string(), false)
        );
    }

    proptest! {
        #[test]
        fn validator_is_structurally_honest(
            before in proptest::option::of(0.0f64..=1.0),
            after in proptest::option::of(0.0f64..=1.0),
            paired in 0u32..40,
            min_pairs in 1u32..10,
        ) {
            let (delta, a) = assess(before, after, paired, min_pairs);
            if paired < min_pairs {
                prop_assert_eq!(a, Assessment::InsufficientData);
                prop_assert_eq!(delta.to_bits(), 0.0f64.to_bits());
            }
            match a {
                Assessment::InsufficientData => prop_assert!(delta == 0.0),
                Assessment::Improved => prop_assert!(delta > 0.0),
                Assessment::Regressed => prop_assert!(delta < 0.0),
                Assessment::NoChange => prop_assert!(delta == 0.0),
            }
        }
    }
}
