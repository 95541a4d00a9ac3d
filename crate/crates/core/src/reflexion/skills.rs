use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::vault::{streams, Author, LogRecord};
use crate::{Error, Harness, Result};

/// Episodes recorded under one prompt revision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Epoch {
    /// Run whose revision opened this epoch; `None` for the registered prompt.
    pub run_id: Option<String>,
    /// The revision discarded earlier history.
    pub after_reset: bool,
    pub opened: DateTime<Utc>,
    pub outcomes: Vec<bool>,
}

impl Epoch {
    pub fn effectiveness(&self) -> Option<f64> {
        if self.outcomes.is_empty() {
            return None;
        }
        Some(self.outcomes.iter().filter(|&&s| s).count() as f64 / self.outcomes.len() as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skill {
    pub skill_id: String,
    pub prompt_text: String,
    /// Episodes available to learn from. Drops only through a reset.
    pub episode_count: u64,
    /// Running effectiveness within the current epoch after each episode.
    pub metric_history: Vec<(DateTime<Utc>, f64)>,
    pub epochs: Vec<Epoch>,
}

impl Skill {
    fn fold(skill_id: &str, records: &[LogRecord]) -> Option<Skill> {
        let mut skill: Option<Skill> = None;
        let mut reset_pending = false;
        for r in records.iter().filter(|r| r.str_field("skill_id") == Some(skill_id)) {
            match (r.str_field("event"), skill.as_mut()) {
                (Some("registered"), None) => {
                    skill = Some(Skill {
                        skill_id: skill_id.to_string(),
                        prompt_text: r.str_field("prompt").unwrap_or_default().to_string(),
                        episode_count: 0,
                        metric_history: Vec::new(),
                        epochs: vec![Epoch {
                            run_id: None,
                            after_reset: false,
                            opened: r.ts,
                            outcomes: Vec::new(),
                        }],
                    })
                }
                (Some("episode"), Some(s)) => {
                    let success = r.bool_field("success").unwrap_or(false);
                    let epoch = s.epochs.last_mut().expect("registered skill has an epoch");
                    epoch.outcomes.push(success);
                    s.episode_count += 1;
                    let eff = epoch.effectiveness().unwrap_or(0.0);
                    s.metric_history.push((r.ts, eff));
                }
                (Some("reset"), Some(s)) => {
                    s.episode_count = 0;
                    reset_pending = true;
                }
                (Some("revision"), Some(s)) => {
                    s.prompt_text = r.str_field("prompt").unwrap_or_default().to_string();
                    s.epochs.push(Epoch {
                        run_id: r.str_field("run_id").map(str::to_string),
                        after_reset: reset_pending,
                        opened: r.ts,
                        outcomes: Vec::new(),
                    });
                    reset_pending = false;
                }
                _ => {}
            }
        }
        skill
    }

    pub fn current_epoch(&self) -> &Epoch {
        self.epochs.last().expect("registered skill has an epoch")
    }

    pub fn epoch_of_run(&self, run_id: &str) -> Option<usize> {
        self.epochs
            .iter()
            .position(|e| e.run_id.as_deref() == Some(run_id))
    }
}

pub fn register_skill(h: &Harness, skill_id: &str, prompt: &str) -> Result<Skill> {
    if load_skill(h, skill_id).is_ok() {
        return Err(Error::Conflict(format!("skill `{skill_id}` already registered")));
    }
    if skill_id.trim().is_empty() {
        return Err(Error::Invalid("empty skill id".into()));
    }
    h.vault.append_record(
        streams::SKILL_LOG,
        Author::Human,
        json!({"event": "registered", "skill_id": skill_id, "prompt": prompt}),
        None,
    )?;
    load_skill(h, skill_id)
}

/// One reflexion episode for a skill: did the proactive action succeed?
pub fn record_skill_episode(h: &Harness, skill_id: &str, episode_id: &str, success: bool) -> Result<()> {
    load_skill(h, skill_id)?;
    h.vault.append_record(
        streams::SKILL_LOG,
        Author::Agent,
        json!({"event": "episode", "skill_id": skill_id, "episode_id": episode_id, "success": success}),
        None,
    )?;
    Ok(())
}

pub fn load_skill(h: &Harness, skill_id: &str) -> Result<Skill> {
    let records = h.vault.records(streams::SKILL_LOG)?;
    Skill::fold(skill_id, &records).ok_or_else(|| Error::NotFound(format!("skill `{skill_id}`")))
}

pub fn list_skills(h: &Harness) -> Result<Vec<Skill>> {
    let records = h.vault.records(streams::SKILL_LOG)?;
    let ids: BTreeSet<&str> = records
        .iter()
        .filter(|r| r.str_field("event") == Some("registered"))
        .filter_map(|r| r.str_field("skill_id"))
        .collect();
    Ok(ids.into_iter().filter_map(|id| Skill::fold(id, &records)).collect())
}

/// Resets in the skill log that lack a human-authored reset record in the
/// interactions stream. Empty on an honest vault.
pub fn unauthorised_resets(h: &Harness) -> Result<Vec<String>> {
    let authorised: BTreeSet<String> = h
        .vault
        .records(streams::INTERACTIONS)?
        .into_iter()
        .filter(|r| r.author == Author::Human && r.str_field("event") == Some("skill_reset"))
        .filter_map(|r| r.str_field("run_id").map(str::to_string))
        .collect();
    Ok(h
        .vault
        .records(streams::SKILL_LOG)?
        .into_iter()
        .filter(|r| r.str_field("event") == Some("reset"))
        .filter_map(|r| r.str_field("run_id").map(str::to_string))
        .filter(|run| !authorised.contains(run))
        .collect())
}
