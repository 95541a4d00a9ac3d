use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{count_tokens, Completion, CompletionRequest, Depth, GatewayError, Usage, SCRIPTED_MODEL_ID};

/// Which calls a step answers. `archetype` and `task` left out match any
/// value; `ordinal` left out makes the step a reusable fallback.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepKey {
    pub depth: Depth,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archetype: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordinal: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptStep {
    pub key: StepKey,
    #[serde(default)]
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
    /// Simulate the provider failing for this call.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ScriptStep {
    pub fn new(depth: Depth, task: &str, response: impl Into<String>) -> Self {
        ScriptStep {
            key: StepKey {
                depth,
                archetype: None,
                task: Some(task.to_string()),
                ordinal: None,
            },
            response: response.into(),
            model_id: None,
            truncated: false,
            error: None,
        }
    }

    pub fn at(mut self, ordinal: u32) -> Self {
        self.key.ordinal = Some(ordinal);
        self
    }

    pub fn for_archetype(mut self, archetype: &str) -> Self {
        self.key.archetype = Some(archetype.to_string());
        self
    }

    pub fn failing(mut self, error: &str) -> Self {
        self.error = Some(error.to_string());
        self
    }

    fn matches(&self, req: &CompletionRequest) -> bool {
        self.key.depth == req.depth
            && self
                .key
                .archetype
                .as_ref()
                .is_none_or(|a| Some(a) == req.archetype.as_ref())
            && self.key.task.as_ref().is_none_or(|t| *t == req.task)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    pub steps: Vec<ScriptStep>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScenarioFile {
    Steps(Vec<ScriptStep>),
    Full(Scenario),
}

impl Scenario {
    pub fn new(steps: Vec<ScriptStep>) -> Self {
        Scenario { model_id: None, steps }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(match serde_json::from_str::<ScenarioFile>(text)? {
            ScenarioFile::Steps(steps) => Scenario::new(steps),
            ScenarioFile::Full(s) => s,
        })
    }

    /// Accepts a bare step array, a `{model_id, steps}` object, or any JSON
    /// object carrying a `scenario` member in either of those shapes.
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let err = |message: String| GatewayError::Scenario {
            path: path.to_path_buf(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        let inner = value.get("scenario").cloned().unwrap_or(value);
        let file: ScenarioFile = serde_json::from_value(inner).map_err(|e| err(e.to_string()))?;
        Ok(match file {
            ScenarioFile::Steps(steps) => Scenario::new(steps),
            ScenarioFile::Full(s) => s,
        })
    }
}

pub(super) struct Scripted {
    pub completion: Completion,
    pub model_id_from_step: bool,
}

/// Replays a scenario. Ordinals count calls per (depth, archetype, task).
#[derive(Debug)]
pub struct ScriptedBackend {
    scenario: Scenario,
    counters: Mutex<BTreeMap<(Depth, Option<String>, String), u32>>,
}

impl ScriptedBackend {
    pub fn new(scenario: Scenario) -> Self {
        ScriptedBackend {
            scenario,
            counters: Mutex::new(BTreeMap::new()),
        }
    }

    pub(super) fn complete(&self, req: &CompletionRequest) -> Result<Scripted, GatewayError> {
        let ordinal = {
            let mut counters = self.counters.lock().unwrap();
            let n = counters
                .entry((req.depth, req.archetype.clone(), req.task.clone()))
                .or_insert(0);
            let ordinal = *n;
            *n += 1;
            ordinal
        };
        let candidates = self.scenario.steps.iter().filter(|s| s.matches(req));
        let mut fallback = None;
        let mut step = None;
        for s in candidates {
            match s.key.ordinal {
                Some(o) if o == ordinal => {
                    step = Some(s);
                    break;
                }
                None if fallback.is_none() => fallback = Some(s),
                _ => {}
            }
        }
        let step = step.or(fallback).ok_or_else(|| {
            GatewayError::ScenarioExhausted(format!(
                "depth={} archetype={} task={} ordinal={ordinal}",
                req.depth,
                req.archetype.as_deref().unwrap_or("-"),
                req.task
            ))
        })?;
        if let Some(e) = &step.error {
            return Err(GatewayError::Unreachable(e.clone()));
        }

        let tokens = count_tokens(&step.response);
        let over = tokens >= req.budget;
        let text = if tokens > req.budget {
            step.response
                .split_whitespace()
                .take(req.budget as usize)
                .collect::<Vec<_>>()
                .join(" ")
        } else {
            step.response.clone()
        };
        let input_tokens = req.messages.iter().map(|m| count_tokens(&m.text)).sum();
        let model_id = step
            .model_id
            .clone()
            .or_else(|| self.scenario.model_id.clone())
            .unwrap_or_else(|| SCRIPTED_MODEL_ID.to_string());
        Ok(Scripted {
            completion: Completion {
                usage: Usage {
                    input_tokens,
                    output_tokens: count_tokens(&text),
                },
                text,
                model_id,
                truncated: step.truncated || over,
            },
            model_id_from_step: step.model_id.is_some(),
        })
    }
}
