use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::archetype::Surface;
use crate::gateway::Scenario;
use crate::know::parse_corpus;
use crate::reflexion::{apply_revision, decide_adr, record_skill_episode, register_skill, run_improve, validate_improve};
use crate::week::IsoWeek;
use crate::{Error, Result, Settings};

use super::listen::ChatRequest;
use super::ticks::{KnowStage, StageStatus};
use super::Runtime;

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum ReplayAction {
    Message {
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        archetype: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        modality: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        surface: Option<Surface>,
    },
    Journal {
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        title: Option<String>,
    },
    Notice,
    Know {
        week: IsoWeek,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        force: bool,
        /// All stages when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stages: Option<Vec<KnowStage>>,
        /// Scout sources for this run; an empty corpus when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        corpus: Option<Vec<Value>>,
    },
    RegisterSkill {
        skill: String,
        prompt: String,
    },
    SkillEpisode {
        skill: String,
        episode: String,
        success: bool,
    },
    /// Propose, apply and validate one revision.
    Improve {
        skill: String,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        force: bool,
        #[serde(default = "yes")]
        apply: bool,
    },
    AdrDecision {
        id: String,
        adopt: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayEvent {
    pub at: DateTime<Utc>,
    #[serde(flatten)]
    pub action: ReplayAction,
}

/// A complete scripted run: model responses plus timed events.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayScript {
    pub start: DateTime<Utc>,
    #[serde(default)]
    pub settings: Settings,
    pub model: Scenario,
    pub events: Vec<ReplayEvent>,
}

impl ReplayScript {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("script {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::parse("replay script", format!("{}: {e}", path.display())))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReplayOutcome {
    pub vault: PathBuf,
    pub events: usize,
    pub messages: usize,
    /// Expected refusals and skipped stages, one line each.
    pub notes: Vec<String>,
    /// Unexpected failures, one line each.
    pub errors: Vec<String>,
}

/// Run `script` into a fresh vault at `dest`, under a pinned clock.
pub fn replay(script: &ReplayScript, dest: &Path) -> Result<ReplayOutcome> {
    if dest.exists() && dest.read_dir().map(|mut d| d.next().is_some()).unwrap_or(true) {
        return Err(Error::Invalid(format!("{} exists and is not empty", dest.display())));
    }
    let rt = Runtime::scripted(dest, script.model.clone(), script.start, script.settings.clone())?;
    replay_into(&rt, script)
}

/// Run events against an existing runtime. The runtime's clock must be
/// pinned; each event moves it forward.
pub fn replay_into(rt: &Runtime, script: &ReplayScript) -> Result<ReplayOutcome> {
    let clock = rt
        .fixed_clock
        .as_ref()
        .ok_or_else(|| Error::Precondition("replay needs a fixed clock".into()))?;
    let h = &rt.harness;
    let mut out = ReplayOutcome {
        vault: h.vault.root().to_path_buf(),
        ..ReplayOutcome::default()
    };
    let mut last = script.start;
    for (i, ev) in script.events.iter().enumerate() {
        if ev.at < last {
            return Err(Error::Invalid(format!("event {i} at {} goes back in time", ev.at)));
        }
        last = ev.at;
        clock.set(ev.at);
        out.events += 1;
        let tag = format!("event {i} ({})", ev.at.format("%Y-%m-%dT%H:%M"));
        let r: Result<()> = match &ev.action {
            ReplayAction::Message {
                text,
                archetype,
                modality,
                surface,
            } => rt
                .handle_message(&ChatRequest {
                    text: text.clone(),
                    surface: surface.unwrap_or(Surface::Cli),
                    archetype: archetype.clone(),
                    modality: modality.clone(),
                })
                .and_then(|rec| {
                    out.messages += 1;
                    match rec.error {
                        Some(e) => Err(Error::Invalid(format!("{}: {e}", rec.interaction_id))),
                        None => Ok(()),
                    }
                }),
            ReplayAction::Journal { text, title } => rt.write_journal(text, title.as_deref()).map(|_| ()),
            ReplayAction::Notice => rt.notice_tick().map(|s| {
                out.errors.extend(s.errors.iter().map(|e| format!("{tag}: notice: {e}")));
            }),
            ReplayAction::Know {
                week,
                force,
                stages,
                corpus,
            } => {
                let (items, diags) = parse_corpus(corpus.clone().unwrap_or_default());
                out.notes.extend(diags.into_iter().map(|d| format!("{tag}: corpus: {d}")));
                let stages = stages.clone().unwrap_or_else(|| KnowStage::ALL.to_vec());
                rt.know_tick_with(*week, *force, Some(&items), &stages).map(|s| {
                    for o in &s.stages {
                        let line = format!("{tag}: {week} {}: {}", o.stage, o.detail);
                        match o.status {
                            StageStatus::Failed => out.errors.push(line),
                            StageStatus::Skipped => out.notes.push(line),
                            StageStatus::Done => {}
                        }
                    }
                })
            }
            ReplayAction::RegisterSkill { skill, prompt } => register_skill(h, skill, prompt).map(|_| ()),
            ReplayAction::SkillEpisode {
                skill,
                episode,
                success,
            } => record_skill_episode(h, skill, episode, *success),
            ReplayAction::Improve { skill, force, apply } => run_improve(h, skill, *force).and_then(|rev| {
                if rev.blocked {
                    out.notes.push(format!(
                        "{tag}: {} blocked: {}",
                        rev.run_id,
                        rev.reason.unwrap_or_default()
                    ));
                    return Ok(());
                }
                if *apply {
                    apply_revision(h, &rev.run_id)?;
                    validate_improve(h, &rev.run_id)?;
                }
                Ok(())
            }),
            ReplayAction::AdrDecision { id, adopt } => decide_adr(h, id, *adopt).map(|_| ()),
        };
        if let Err(e) = r {
            out.errors.push(format!("{tag}: {e}"));
        }
    }
    Ok(out)
}
