//! Completion interface shared by every loop depth.
//!
//! A [`ModelProfile`] maps each [`Depth`] to a backend: either a scripted
//! scenario (deterministic, used by tests and replay) or an HTTP
//! chat-completion endpoint.

mod http;
mod scripted;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

pub use http::HttpBackend;
pub use scripted::{Scenario, ScriptStep, ScriptedBackend, StepKey};

pub const SCRIPTED_MODEL_ID: &str = "scripted-v1";

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("no model profile named `{0}`")]
    UnknownProfile(String),
    #[error("model profile `{0}` already registered")]
    DuplicateProfile(String),
    #[error("profile `{profile}` has no backend for depth {depth}")]
    NoBackend { profile: String, depth: Depth },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("scenario exhausted: no step left for {0}")]
    ScenarioExhausted(String),
    #[error("cannot load scenario {path}: {message}")]
    Scenario { path: PathBuf, message: String },
    #[error("credential variable `{0}` is not set")]
    MissingCredential(String),
    #[error("provider unreachable: {0}")]
    Unreachable(String),
    #[error("provider returned an unusable response: {0}")]
    Provider(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Depth {
    Listen,
    Notice,
    Know,
}

impl Depth {
    pub const ALL: [Depth; 3] = [Depth::Listen, Depth::Notice, Depth::Know];

    pub fn as_str(&self) -> &'static str {
        match self {
            Depth::Listen => "listen",
            Depth::Notice => "notice",
            Depth::Know => "know",
        }
    }
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Depth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Depth::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown depth `{s}`"))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    Human,
    Agent,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub text: String,
}

impl Message {
    pub fn system(text: impl Into<String>) -> Self {
        Message { role: Role::System, text: text.into() }
    }

    pub fn human(text: impl Into<String>) -> Self {
        Message { role: Role::Human, text: text.into() }
    }

    pub fn agent(text: impl Into<String>) -> Self {
        Message { role: Role::Agent, text: text.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub messages: Vec<Message>,
    pub depth: Depth,
    pub archetype: Option<String>,
    /// What the call is for (`reply`, `score`, `portrait`, ...). Part of the
    /// scripted step key so scenario files stay stable as prompts change.
    pub task: String,
    pub budget: u32,
}

impl CompletionRequest {
    pub fn new(depth: Depth, task: &str, messages: Vec<Message>, budget: u32) -> Self {
        CompletionRequest {
            messages,
            depth,
            archetype: None,
            task: task.to_string(),
            budget,
        }
    }

    pub fn with_archetype(mut self, archetype: Option<String>) -> Self {
        self.archetype = archetype;
        self
    }

    fn validate(&self) -> Result<(), GatewayError> {
        if self.messages.is_empty() {
            return Err(GatewayError::InvalidRequest("no messages".into()));
        }
        if self.budget == 0 {
            return Err(GatewayError::InvalidRequest("budget must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub input_tokens: u32,
    pub output_tokens: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub model_id: String,
    pub usage: Usage,
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "lowercase")]
pub enum BackendSpec {
    Http {
        base_url: String,
        model: String,
        /// Name of the environment variable holding the API key.
        auth_env: Option<String>,
        #[serde(default = "default_retries")]
        retries: u32,
    },
    Scripted {
        /// Path of the scenario file, relative to the gateway's base dir.
        scenario: PathBuf,
        /// Overrides the scenario's model id for this depth.
        #[serde(default)]
        model_id: Option<String>,
    },
}

fn default_retries() -> u32 {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub name: String,
    pub depths: BTreeMap<Depth, BackendSpec>,
    #[serde(default = "default_true")]
    pub record_model_id: bool,
}

impl ModelProfile {
    /// One scenario file behind all three depths.
    pub fn scripted(name: &str, scenario: impl Into<PathBuf>) -> Self {
        let scenario = scenario.into();
        ModelProfile {
            name: name.to_string(),
            depths: Depth::ALL
                .into_iter()
                .map(|d| {
                    (
                        d,
                        BackendSpec::Scripted {
                            scenario: scenario.clone(),
                            model_id: None,
                        },
                    )
                })
                .collect(),
            record_model_id: true,
        }
    }

    pub fn with_depth(mut self, depth: Depth, spec: BackendSpec) -> Self {
        self.depths.insert(depth, spec);
        self
    }

    fn validate(&self) -> Result<(), GatewayError> {
        for depth in Depth::ALL {
            match self.depths.get(&depth) {
                None => {
                    return Err(GatewayError::NoBackend {
                        profile: self.name.clone(),
                        depth,
                    })
                }
                Some(BackendSpec::Http { base_url, model, .. })
                    if base_url.is_empty() || model.is_empty() =>
                {
                    return Err(GatewayError::InvalidRequest(format!(
                        "profile `{}`: http backend at {depth} needs base_url and model",
                        self.name
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Registry of profiles plus the live backends they point at.
#[derive(Debug)]
pub struct Gateway {
    base_dir: PathBuf,
    profiles: RwLock<BTreeMap<String, ModelProfile>>,
    scenarios: Mutex<BTreeMap<PathBuf, Arc<ScriptedBackend>>>,
    http: HttpBackend,
}

impl Gateway {
    pub fn new(base_dir: impl Into<PathBuf>) -> Self {
        Gateway {
            base_dir: base_dir.into(),
            profiles: RwLock::new(BTreeMap::new()),
            scenarios: Mutex::new(BTreeMap::new()),
            http: HttpBackend::default(),
        }
    }

    /// A gateway with one scripted profile over an in-memory scenario.
    pub fn scripted(profile: &str, scenario: Scenario) -> Self {
        let gw = Gateway::new(".");
        let key = PathBuf::from(format!("<memory:{profile}>"));
        gw.install_scenario(&key, scenario);
        gw.register_profile(ModelProfile::scripted(profile, key))
            .expect("fresh registry");
        gw
    }

    pub fn register_profile(&self, profile: ModelProfile) -> Result<String, GatewayError> {
        profile.validate()?;
        let mut profiles = self.profiles.write().unwrap();
        if profiles.contains_key(&profile.name) {
            return Err(GatewayError::DuplicateProfile(profile.name));
        }
        let name = profile.name.clone();
        profiles.insert(name.clone(), profile);
        Ok(name)
    }

    pub fn profile(&self, name: &str) -> Result<ModelProfile, GatewayError> {
        self.profiles
            .read()
            .unwrap()
            .get(name)
            .cloned()
            .ok_or_else(|| GatewayError::UnknownProfile(name.to_string()))
    }

    /// Make a scenario available under `path` without touching disk.
    pub fn install_scenario(&self, path: &Path, scenario: Scenario) {
        self.scenarios
            .lock()
            .unwrap()
            .insert(path.to_path_buf(), Arc::new(ScriptedBackend::new(scenario)));
    }

    fn scenario(&self, path: &Path) -> Result<Arc<ScriptedBackend>, GatewayError> {
        let mut scenarios = self.scenarios.lock().unwrap();
        if let Some(b) = scenarios.get(path) {
            return Ok(b.clone());
        }
        let full = self.base_dir.join(path);
        let scenario = Scenario::load(&full)?;
        let backend = Arc::new(ScriptedBackend::new(scenario));
        scenarios.insert(path.to_path_buf(), backend.clone());
        Ok(backend)
    }

    pub fn complete(
        &self,
        profile: &str,
        request: &CompletionRequest,
    ) -> Result<Completion, GatewayError> {
        request.validate()?;
        let spec = {
            let profiles = self.profiles.read().unwrap();
            let p = profiles
                .get(profile)
                .ok_or_else(|| GatewayError::UnknownProfile(profile.to_string()))?;
            p.depths
                .get(&request.depth)
                .cloned()
                .ok_or_else(|| GatewayError::NoBackend {
                    profile: profile.to_string(),
                    depth: request.depth,
                })?
        };
        match spec {
            BackendSpec::Scripted { scenario, model_id } => {
                let mut c = self.scenario(&scenario)?.complete(request)?;
                if let Some(id) = model_id {
                    if !c.model_id_from_step {
                        c.completion.model_id = id;
                    }
                }
                Ok(c.completion)
            }
            BackendSpec::Http {
                base_url,
                model,
                auth_env,
                retries,
            } => self
                .http
                .complete(&base_url, &model, auth_env.as_deref(), retries, request),
        }
    }
}

/// Output-token estimate used where a provider reports none.
pub(crate) fn count_tokens(text: &str) -> u32 {
    text.split_whitespace().count() as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(depth: Depth, task: &str, budget: u32) -> CompletionRequest {
        CompletionRequest::new(depth, task, vec![Message::human("hello")], budget)
    }

    fn scenario() -> Scenario {
        Scenario::from_json(
            r#"[
              {"key": {"depth": "know", "task": "portrait-W20", "ordinal": 0},
               "response": "A week spent circling grammar."},
              {"key": {"depth": "listen", "task": "reply"}, "response": "noted"}
            ]"#,
        )
        .unwrap()
    }

    #[test]
    fn scripted_is_deterministic_across_instances() {
        let a = Gateway::scripted("s", scenario());
        let b = Gateway::scripted("s", scenario());
        let ra = a.complete("s", &req(Depth::Know, "portrait-W20", 200)).unwrap();
        let rb = b.complete("s", &req(Depth::Know, "portrait-W20", 200)).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(ra.text, "A week spent circling grammar.");
        assert_eq!(ra.model_id, SCRIPTED_MODEL_ID);
        assert!(!ra.truncated);
    }

    #[test]
    fn budget_one_sets_truncation() {
        let gw = Gateway::scripted("s", scenario());
        let c = gw.complete("s", &req(Depth::Know, "portrait-W20", 1)).unwrap();
        assert!(c.truncated);
        assert_eq!(c.text, "A");
    }

    #[test]
    fn exhausted_and_wildcard_steps() {
        let gw = Gateway::scripted("s", scenario());
        gw.complete("s", &req(Depth::Know, "portrait-W20", 50)).unwrap();
        let err = gw.complete("s", &req(Depth::Know, "portrait-W20", 50)).unwrap_err();
        assert!(matches!(err, GatewayError::ScenarioExhausted(_)));
        for _ in 0..3 {
            assert_eq!(gw.complete("s", &req(Depth::Listen, "reply", 50)).unwrap().text, "noted");
        }
    }

    #[test]
    fn profile_registry() {
        let gw = Gateway::scripted("s", scenario());
        assert!(gw.profile("s").is_ok());
        let dup = ModelProfile::scripted("s", "<memory:s>");
        assert!(matches!(
            gw.register_profile(dup),
            Err(GatewayError::DuplicateProfile(_))
        ));
        let mut partial = ModelProfile::scripted("p", "<memory:s>");
        partial.depths.remove(&Depth::Know);
        assert!(matches!(
            gw.register_profile(partial),
            Err(GatewayError::NoBackend { .. })
        ));
    }

    #[test]
    fn per_depth_model_override() {
        let gw = Gateway::scripted("base", scenario());
        let profile = ModelProfile::scripted("tiered", "<memory:base>").with_depth(
            Depth::Know,
            BackendSpec::Scripted {
                scenario: "<memory:base>".into(),
                model_id: Some("scripted-know-v1".into()),
            },
        );
        gw.register_profile(profile).unwrap();
        let c = gw.complete("tiered", &req(Depth::Know, "portrait-W20", 50)).unwrap();
        assert_eq!(c.model_id, "scripted-know-v1");
        let l = gw.complete("tiered", &req(Depth::Listen, "reply", 50)).unwrap();
        assert_eq!(l.model_id, SCRIPTED_MODEL_ID);
    }

    #[test]
    fn empty_request_rejected() {
        let gw = Gateway::scripted("s", scenario());
        let mut r = req(Depth::Listen, "reply", 5);
        r.messages.clear();
        assert!(matches!(gw.complete("s", &r), Err(GatewayError::InvalidRequest(_))));
        let r = req(Depth::Listen, "reply", 0);
        assert!(matches!(gw.complete("s", &r), Err(GatewayError::InvalidRequest(_))));
    }
}
