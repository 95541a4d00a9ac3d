use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use chrono::Duration;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::gateway::Message;
use crate::know::{
    digest_for_week, extract_claims, generate_delta, generate_profile, generate_self_portrait, portrait_path,
    profile_path, delta_path, run_scout, week_closed, SourceItem, Subject,
};
use crate::reflexion::{has_meta_entry, score_episode, write_meta_reflexion};
use crate::vault::{streams, Author, LogRecord, ReadWindow};
use crate::week::{IsoWeek, WeekRange};
use crate::{Error, Result};

use super::Runtime;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoticeSummary {
    pub noop: bool,
    pub episodes: Vec<String>,
    pub interactions: usize,
    pub claims: usize,
    /// Interactions still inside an open episode, left for a later tick.
    pub deferred: usize,
    pub errors: Vec<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnowStage {
    Portrait,
    PartnerProfile,
    AgentProfile,
    Delta,
    Scout,
    Meta,
}

impl KnowStage {
    pub const ALL: [KnowStage; 6] = [
        KnowStage::Portrait,
        KnowStage::PartnerProfile,
        KnowStage::AgentProfile,
        KnowStage::Delta,
        KnowStage::Scout,
        KnowStage::Meta,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            KnowStage::Portrait => "portrait",
            KnowStage::PartnerProfile => "partner_profile",
            KnowStage::AgentProfile => "agent_profile",
            KnowStage::Delta => "delta",
            KnowStage::Scout => "scout",
            KnowStage::Meta => "meta",
        }
    }
}

impl fmt::Display for KnowStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KnowStage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        KnowStage::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown know stage `{s}`"))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Done,
    Skipped,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: KnowStage,
    pub status: StageStatus,
    pub detail: String,
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnowSummary {
    pub week: IsoWeek,
    pub stages: Vec<StageOutcome>,
}

impl KnowSummary {
    pub fn status(&self, stage: KnowStage) -> Option<StageStatus> {
        self.stages.iter().find(|s| s.stage == stage).map(|s| s.status)
    }

    pub fn failed(&self) -> impl Iterator<Item = &StageOutcome> {
        self.stages.iter().filter(|s| s.status == StageStatus::Failed)
    }
}

struct Pending {
    id: String,
    ts: chrono::DateTime<chrono::Utc>,
    last_ts: chrono::DateTime<chrono::Utc>,
    max_seq: u64,
    human: String,
    agent: String,
    modality: Option<String>,
}

fn notice_cursor(records: &[LogRecord]) -> (u64, usize) {
    let ticks: Vec<&LogRecord> = records
        .iter()
        .filter(|r| r.str_field("event") == Some("notice_tick"))
        .collect();
    let through = ticks
        .last()
        .and_then(|r| r.i64_field("through_seq"))
        .unwrap_or(0)
        .max(0) as u64;
    (through, ticks.len())
}

fn skipped(stage: KnowStage, detail: impl Into<String>, path: Option<PathBuf>) -> StageOutcome {
    StageOutcome {
        stage,
        status: StageStatus::Skipped,
        detail: detail.into(),
        path,
    }
}

fn outcome(stage: KnowStage, r: Result<(String, Option<PathBuf>)>) -> StageOutcome {
    match r {
        Ok((detail, path)) => StageOutcome {
            stage,
            status: StageStatus::Done,
            detail,
            path,
        },
        Err(Error::Precondition(m)) => skipped(stage, m, None),
        Err(e) => StageOutcome {
            stage,
            status: StageStatus::Failed,
            detail: e.to_string(),
            path: None,
        },
    }
}

impl Runtime {
    /// Notice: score finished episodes and extract partner claims from every
    /// interaction not yet seen. An episode is finished once the gap setting
    /// has elapsed since its last message. Without new finished episodes the
    /// tick writes nothing.
    pub fn notice_tick(&self) -> Result<NoticeSummary> {
        let _bg = self.background.lock().unwrap();
        let h = &self.harness;
        let all = h.vault.records(streams::INTERACTIONS)?;
        let (through, ticks) = notice_cursor(&all);

        let mut pending: Vec<Pending> = Vec::new();
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        for r in all.iter().filter(|r| r.seq > through) {
            let event = r.str_field("event");
            if !matches!(event, Some("human_message" | "agent_message")) {
                continue;
            }
            let Some(id) = r.str_field("interaction_id") else { continue };
            let i = *index.entry(id.to_string()).or_insert_with(|| {
                pending.push(Pending {
                    id: id.to_string(),
                    ts: r.ts,
                    last_ts: r.ts,
                    max_seq: r.seq,
                    human: String::new(),
                    agent: String::new(),
                    modality: None,
                });
                pending.len() - 1
            });
            let p = &mut pending[i];
            p.last_ts = p.last_ts.max(r.ts);
            p.max_seq = p.max_seq.max(r.seq);
            let text = r.str_field("text").unwrap_or_default().to_string();
            if event == Some("human_message") {
                p.human = text;
                p.modality = r.str_field("modality").map(str::to_string);
            } else {
                p.agent = text;
            }
        }

        let gap = Duration::minutes(h.settings.episode_gap_minutes.max(1));
        let mut episodes: Vec<Vec<Pending>> = Vec::new();
        for p in pending {
            match episodes.last_mut() {
                Some(ep) if p.ts - ep.last().expect("non-empty").last_ts <= gap => ep.push(p),
                _ => episodes.push(vec![p]),
            }
        }
        let now = h.now();
        let mut summary = NoticeSummary::default();
        let mut new_through = through;
        for ep in episodes {
            let last = ep.last().expect("non-empty");
            if now - last.last_ts < gap {
                summary.deferred += ep.len();
                continue;
            }
            let episode_id = format!("ep-{}", ep[0].id);
            let ids: Vec<String> = ep.iter().map(|p| p.id.clone()).collect();
            if let Err(e) = score_episode(h, &episode_id, &ids) {
                summary.errors.push(format!("{episode_id}: {e}"));
            }
            for p in &ep {
                let mut transcript = vec![Message::human(&p.human)];
                if !p.agent.is_empty() {
                    transcript.push(Message::agent(&p.agent));
                }
                match extract_claims(h, &p.id, &transcript, p.modality.as_deref()) {
                    Ok(c) => summary.claims += c.len(),
                    Err(e) => summary.errors.push(format!("{}: {e}", p.id)),
                }
                new_through = new_through.max(p.max_seq);
            }
            summary.interactions += ep.len();
            summary.episodes.push(episode_id);
        }

        if summary.episodes.is_empty() {
            summary.noop = true;
            return Ok(summary);
        }
        h.vault.append_record(
            streams::INTERACTIONS,
            Author::System,
            json!({
                "event": "notice_tick",
                "interaction_id": format!("notice-{}", ticks + 1),
                "through_seq": new_through,
                "episodes": summary.episodes.len(),
                "claims": summary.claims,
            }),
            None,
        )?;
        Ok(summary)
    }

    /// Know: every weekly generator for `week`, in order. Each stage skips
    /// when its output already exists and a failing stage does not stop the
    /// ones after it.
    pub fn know_tick(&self, week: IsoWeek, force: bool) -> Result<KnowSummary> {
        self.know_tick_with(week, force, None, &KnowStage::ALL)
    }

    /// As [`Runtime::know_tick`], with an explicit scout corpus and a subset
    /// of stages.
    pub fn know_tick_with(
        &self,
        week: IsoWeek,
        force: bool,
        corpus: Option<&[SourceItem]>,
        stages: &[KnowStage],
    ) -> Result<KnowSummary> {
        let h = &self.harness;
        if !force && !week_closed(week, h.now()) {
            return Err(Error::Precondition(format!("{week} has not reached its Know anchor")));
        }
        let _bg = self.background.lock().unwrap();
        let _lock = h
            .vault
            .try_lock(&format!("know-{week}"))?
            .ok_or_else(|| Error::Conflict(format!("a Know tick for {week} is already running")))?;

        let has_interactions = h
            .vault
            .read_stream(streams::INTERACTIONS, ReadWindow::weeks(WeekRange::single(week)))?
            .records
            .iter()
            .any(|r| r.str_field("event") == Some("human_message"));
        let mut out = Vec::new();
        for stage in KnowStage::ALL.into_iter().filter(|s| stages.contains(s)) {
            let existing = match stage {
                KnowStage::Portrait => Some(portrait_path(h, week)),
                KnowStage::PartnerProfile => Some(profile_path(h, Subject::Partner, week)),
                KnowStage::AgentProfile => Some(profile_path(h, Subject::Agent, week)),
                KnowStage::Delta => Some(delta_path(h, week)),
                KnowStage::Scout => digest_for_week(h, week)?.map(|d| d.path),
                KnowStage::Meta => None,
            }
            .filter(|p| h.vault.doc_exists(p));
            if let Some(p) = existing {
                out.push(skipped(stage, "already generated", Some(p)));
                continue;
            }
            if stage == KnowStage::Meta && has_meta_entry(h, week)? {
                out.push(skipped(stage, "already generated", Some(h.vault.layout().meta_reflexion_path().into())));
                continue;
            }
            let needs_messages = matches!(stage, KnowStage::Portrait | KnowStage::PartnerProfile | KnowStage::AgentProfile);
            if needs_messages && !has_interactions {
                out.push(skipped(stage, format!("no interactions in {week}"), None));
                continue;
            }
            let r = match stage {
                KnowStage::Portrait => {
                    generate_self_portrait(h, week).map(|d| ("self-portrait written".to_string(), Some(d.path)))
                }
                KnowStage::PartnerProfile => generate_profile(h, Subject::Partner, week, force)
                    .map(|d| ("partner profile written".to_string(), Some(d.path))),
                KnowStage::AgentProfile => generate_profile(h, Subject::Agent, week, force)
                    .map(|d| ("agent profile written".to_string(), Some(d.path))),
                KnowStage::Delta => generate_delta(h, week).map(|o| {
                    (
                        format!(
                            "delta written after {} attempt(s), coverage {:.2}",
                            o.attempts, o.reducibility.coverage
                        ),
                        Some(o.path),
                    )
                }),
                KnowStage::Scout => {
                    let (items, diags) = match corpus {
                        Some(c) => (c.to_vec(), Vec::new()),
                        None => self.scout_corpus(),
                    };
                    run_scout(h, week, &items).map(|run| {
                        let mut d = format!("{} finding(s), {} ADR(s)", run.digest.findings.len(), run.adrs.len());
                        for x in diags.iter().chain(&run.diagnostics) {
                            d.push_str("; ");
                            d.push_str(x);
                        }
                        (d, Some(run.path))
                    })
                }
                KnowStage::Meta => write_meta_reflexion(h, week).map(|e| {
                    (
                        format!("meta-reflexion over {} verdict(s)", e.evidence.len()),
                        Some(h.vault.layout().meta_reflexion_path().to_path_buf()),
                    )
                }),
            };
            let o = outcome(stage, r);
            if o.status == StageStatus::Failed {
                tracing::warn!(%week, stage = %stage, "know stage failed: {}", o.detail);
            }
            out.push(o);
        }
        Ok(KnowSummary { week, stages: out })
    }
}
