use std::collections::{BTreeMap, VecDeque};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::archetype::{log_invocation, select_archetype, Archetype, Invocation, SelectionContext, Surface};
use crate::gateway::{CompletionRequest, Depth, Message};
use crate::reflexion::{load_constitution, score_interaction};
use crate::vault::{streams, Author, Vault};
use crate::{Error, Harness, Result};

use super::Runtime;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub text: String,
    #[serde(default = "default_surface")]
    pub surface: Surface,
    /// Ask for a specific archetype instead of letting selection decide.
    #[serde(default)]
    pub archetype: Option<String>,
    /// e.g. `voice` for a transcribed voice note.
    #[serde(default)]
    pub modality: Option<String>,
}

fn default_surface() -> Surface {
    Surface::Api
}

impl ChatRequest {
    pub fn new(text: impl Into<String>) -> Self {
        ChatRequest {
            text: text.into(),
            surface: Surface::Api,
            archetype: None,
            modality: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub interaction_id: String,
    pub ts: DateTime<Utc>,
    pub surface: Surface,
    pub human_text: String,
    pub agent_text: String,
    pub archetype: Option<String>,
    pub depth: Depth,
    pub truncated: bool,
    pub model_id: Option<String>,
    /// Constitution score rows written for this interaction.
    pub scores: usize,
    /// Set when the reply could not be produced.
    pub error: Option<String>,
}

pub(super) struct ListenState {
    next_id: u64,
    recent: VecDeque<Message>,
    history: BTreeMap<String, u64>,
}

impl ListenState {
    fn load(vault: &Vault, keep: usize) -> Result<Self> {
        let mut next_id = 1;
        let mut recent = VecDeque::new();
        for r in vault.records(streams::INTERACTIONS)? {
            let msg = match r.str_field("event") {
                Some("human_message") => Message::human(r.str_field("text").unwrap_or_default()),
                Some("agent_message") => Message::agent(r.str_field("text").unwrap_or_default()),
                _ => continue,
            };
            if let Some(n) = r
                .str_field("interaction_id")
                .and_then(|id| id.strip_prefix("i-"))
                .and_then(|n| n.parse::<u64>().ok())
            {
                next_id = next_id.max(n + 1);
            }
            if !msg.text.is_empty() {
                recent.push_back(msg);
                if recent.len() > keep {
                    recent.pop_front();
                }
            }
        }
        let mut history = BTreeMap::new();
        for r in vault.records(streams::ARCHETYPE_LOG)? {
            if let Some(a) = r.str_field("archetype") {
                *history.entry(a.to_string()).or_default() += 1;
            }
        }
        Ok(ListenState {
            next_id,
            recent,
            history,
        })
    }

    fn remember(&mut self, msg: Message, keep: usize) {
        self.recent.push_back(msg);
        while self.recent.len() > keep {
            self.recent.pop_front();
        }
    }
}

fn classify(h: &Harness, text: &str, candidates: &[&Archetype]) -> Option<String> {
    let names: Vec<&str> = candidates.iter().map(|a| a.name.as_str()).collect();
    let req = CompletionRequest::new(
        Depth::Listen,
        "classify",
        vec![
            Message::system(format!(
                "Name the one archetype best suited to answer. Options: {}. Reply with the name only.",
                names.join(", ")
            )),
            Message::human(text),
        ],
        16,
    );
    match h.complete(&req) {
        Ok(c) => Some(c.text.trim().to_string()),
        Err(e) => {
            tracing::debug!("classifier unavailable: {e}");
            None
        }
    }
}

impl Runtime {
    /// Listen: answer one human message.
    ///
    /// The human message is logged first. A reply logs exactly one archetype
    /// invocation and is scored against the constitution; a gateway failure
    /// leaves an empty agent message with the error and no invocation.
    pub fn handle_message(&self, req: &ChatRequest) -> Result<InteractionRecord> {
        let text = req.text.trim();
        if text.is_empty() {
            return Err(Error::Invalid("empty message".into()));
        }
        let h = &self.harness;
        let keep = h.settings.context_messages.max(1);
        let mut guard = self.listen.lock().unwrap();
        if guard.is_none() {
            *guard = Some(ListenState::load(&h.vault, keep)?);
        }
        let state = guard.as_mut().expect("loaded");

        let mut recent: Vec<String> = state.recent.iter().map(|m| m.text.clone()).collect();
        recent.push(text.to_string());
        let ctx = SelectionContext {
            recent: &recent,
            depth: Some(Depth::Listen),
            requested: req.archetype.as_deref(),
        };
        let archetype = select_archetype(&h.registry, &ctx, &state.history, |c| classify(h, text, c))?;

        let interaction_id = format!("i-{:05}", state.next_id);
        state.next_id += 1;
        let mut human = json!({
            "event": "human_message",
            "interaction_id": interaction_id,
            "surface": req.surface.as_str(),
            "text": text,
        });
        if let Some(m) = &req.modality {
            human["modality"] = Value::from(m.as_str());
        }
        let human_rec = h.vault.append_record(streams::INTERACTIONS, Author::Human, human, None)?;
        state.remember(Message::human(text), keep);

        let charter = h.registry.get(&archetype).map(|a| a.charter.trim()).unwrap_or_default();
        let mut messages = vec![Message::system(format!("You are answering as {archetype}. {charter}"))];
        messages.extend(state.recent.iter().cloned());
        let request = CompletionRequest::new(Depth::Listen, "reply", messages, h.settings.budgets.listen)
            .with_archetype(Some(archetype.clone()));

        let mut record = InteractionRecord {
            interaction_id: interaction_id.clone(),
            ts: human_rec.ts,
            surface: req.surface,
            human_text: text.to_string(),
            agent_text: String::new(),
            archetype: None,
            depth: Depth::Listen,
            truncated: false,
            model_id: None,
            scores: 0,
            error: None,
        };

        let completion = match h.complete(&request) {
            Ok(c) => c,
            Err(e) => {
                let note = e.to_string();
                h.vault.append_record(
                    streams::INTERACTIONS,
                    Author::Agent,
                    json!({
                        "event": "agent_message",
                        "interaction_id": interaction_id,
                        "surface": req.surface.as_str(),
                        "text": "",
                        "depth": "listen",
                        "truncated": false,
                        "error": note,
                    }),
                    None,
                )?;
                record.error = Some(note);
                return Ok(record);
            }
        };

        let model = h.recorded_model(&completion);
        h.vault.append_record(
            streams::INTERACTIONS,
            Author::Agent,
            json!({
                "event": "agent_message",
                "interaction_id": interaction_id,
                "surface": req.surface.as_str(),
                "text": completion.text,
                "archetype": archetype,
                "depth": "listen",
                "truncated": completion.truncated,
            }),
            model.clone(),
        )?;
        log_invocation(
            &h.vault,
            &h.registry,
            &Invocation {
                archetype: archetype.clone(),
                interaction_id: interaction_id.clone(),
                surface: req.surface,
                success: true,
            },
            model.clone(),
        )?;
        *state.history.entry(archetype.clone()).or_default() += 1;
        state.remember(Message::agent(completion.text.clone()), keep);

        record.agent_text = completion.text.clone();
        record.archetype = Some(archetype);
        record.truncated = completion.truncated;
        record.model_id = model;

        let transcript = [Message::human(text), Message::agent(completion.text)];
        match load_constitution(&h.vault).and_then(|c| score_interaction(h, &interaction_id, &transcript, &c)) {
            Ok(rows) => record.scores = rows.len(),
            Err(e) => tracing::warn!(%interaction_id, "not scored: {e}"),
        }
        Ok(record)
    }
}
