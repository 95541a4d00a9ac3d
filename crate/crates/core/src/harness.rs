//! The shared handle every loop works through.

use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::archetype::Registry;
use crate::gateway::{Completion, CompletionRequest, Depth, Gateway};
use crate::vault::Vault;
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budgets {
    pub listen: u32,
    pub notice: u32,
    pub know: u32,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            listen: 512,
            notice: 2048,
            know: 4096,
        }
    }
}

impl Budgets {
    pub fn for_depth(&self, depth: Depth) -> u32 {
        match depth {
            Depth::Listen => self.listen,
            Depth::Notice => self.notice,
            Depth::Know => self.know,
        }
    }
}

/// Thresholds and knobs. Every field has a default; config files only need
/// to name what they change.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    /// Paired samples below which the validator refuses to claim an effect.
    pub min_pairs: u32,
    pub dominance_threshold: f64,
    pub starvation_weeks: u32,
    pub reducibility_threshold: f64,
    pub continuity_days: i64,
    pub min_ngram: usize,
    /// Minimum distance between a reframe and its reuse.
    pub reuse_min_days: i64,
    /// Silence that separates two episodes.
    pub episode_gap_minutes: i64,
    /// Recent messages handed to archetype selection and the reply prompt.
    pub context_messages: usize,
    /// Invocations before this instant were never logged; joins between
    /// interactions and invocations ignore them.
    pub archetype_logging_from: Option<DateTime<Utc>>,
    /// Name used in agent-side file names (`YYYY-Www-<name>.md`).
    pub agent_name: String,
    pub budgets: Budgets,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            min_pairs: 5,
            dominance_threshold: 0.40,
            starvation_weeks: 2,
            reducibility_threshold: 0.9,
            continuity_days: 28,
            min_ngram: 3,
            reuse_min_days: 7,
            episode_gap_minutes: 30,
            context_messages: 6,
            archetype_logging_from: None,
            agent_name: "alicia".into(),
            budgets: Budgets::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Harness {
    pub vault: Arc<Vault>,
    pub gateway: Arc<Gateway>,
    pub profile: String,
    pub registry: Registry,
    pub settings: Settings,
}

impl Harness {
    pub fn new(vault: Arc<Vault>, gateway: Arc<Gateway>, profile: &str) -> Self {
        Harness {
            vault,
            gateway,
            profile: profile.to_string(),
            registry: Registry::default(),
            settings: Settings::default(),
        }
    }

    pub fn with_settings(mut self, settings: Settings) -> Self {
        self.settings = settings;
        self
    }

    pub fn with_registry(mut self, registry: Registry) -> Self {
        self.registry = registry;
        self
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.vault.now()
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<Completion> {
        Ok(self.gateway.complete(&self.profile, request)?)
    }

    /// Model id to record, or `None` when the profile opts out.
    pub fn recorded_model(&self, completion: &Completion) -> Option<String> {
        match self.gateway.profile(&self.profile) {
            Ok(p) if !p.record_model_id => None,
            _ => Some(completion.model_id.clone()),
        }
    }
}
