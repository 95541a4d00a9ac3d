use std::time::Duration;

use serde_json::{json, Value};

use super::{count_tokens, Completion, CompletionRequest, GatewayError, Role, Usage};

/// OpenAI-style `POST {base_url}/chat/completions` client.
#[derive(Debug)]
pub struct HttpBackend {
    agent: ureq::Agent,
}

impl Default for HttpBackend {
    fn default() -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        HttpBackend { agent }
    }
}

impl HttpBackend {
    pub fn complete(
        &self,
        base_url: &str,
        model: &str,
        auth_env: Option<&str>,
        retries: u32,
        req: &CompletionRequest,
    ) -> Result<Completion, GatewayError> {
        let key = match auth_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| GatewayError::MissingCredential(var.to_string()))?,
            ),
            None => None,
        };
        let body = request_body(model, req);
        let url = format!("{}/chat/completions", base_url.trim_end_matches('/'));

        let mut last_err = None;
        for attempt in 0..=retries {
            if attempt > 0 {
                tracing::warn!(attempt, %url, "retrying completion");
            }
            let mut call = self.agent.post(&url);
            if let Some(k) = &key {
                call = call.header("Authorization", &format!("Bearer {k}"));
            }
            match call.send_json(&body) {
                Ok(mut resp) => {
                    let value: Value = resp
                        .body_mut()
                        .read_json()
                        .map_err(|e| GatewayError::Provider(e.to_string()))?;
                    return parse_response(&value, model, req.budget);
                }
                Err(e) => last_err = Some(e),
            }
        }
        Err(GatewayError::Unreachable(
            last_err.map(|e| e.to_string()).unwrap_or_default(),
        ))
    }
}

fn request_body(model: &str, req: &CompletionRequest) -> Value {
    let messages: Vec<Value> = req
        .messages
        .iter()
        .map(|m| {
            let role = match m.role {
                Role::System => "system",
                Role::Human => "user",
                Role::Agent => "assistant",
            };
            json!({"role": role, "content": m.text})
        })
        .collect();
    json!({"model": model, "messages": messages, "max_tokens": req.budget})
}

fn parse_response(value: &Value, model: &str, budget: u32) -> Result<Completion, GatewayError> {
    let choice = value
        .pointer("/choices/0")
        .ok_or_else(|| GatewayError::Provider("no choices in response".into()))?;
    let text = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| GatewayError::Provider("choice has no message content".into()))?
        .to_string();
    let finish = choice.get("finish_reason").and_then(Value::as_str);
    let usage = Usage {
        input_tokens: value
            .pointer("/usage/prompt_tokens")
            .and_then(Value::as_u64)
            .unwrap_or(0) as u32,
        output_tokens: value
            .pointer("/usage/completion_tokens")
            .and_then(Value::as_u64)
            .map(|n| n as u32)
            .unwrap_or_else(|| count_tokens(&text)),
    };
    let truncated = match finish {
        Some(reason) => reason == "length" || reason == "max_tokens",
        None => usage.output_tokens >= budget,
    };
    let model_id = value
        .get("model")
        .and_then(Value::as_str)
        .unwrap_or(model)
        .to_string();
    Ok(Completion {
        text,
        model_id,
        usage,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{Depth, Message};

    #[test]
    fn body_maps_roles() {
        let req = CompletionRequest::new(
            Depth::Listen,
            "reply",
            vec![Message::system("s"), Message::human("h"), Message::agent("a")],
            64,
        );
        let body = request_body("m", &req);
        let roles: Vec<&str> = body["messages"]
            .as_array()
            .unwrap()
            .iter()
            .map(|m| m["role"].as_str().unwrap())
            .collect();
        assert_eq!(roles, ["system", "user", "assistant"]);
        assert_eq!(body["max_tokens"], 64);
    }

    #[test]
    fn finish_reason_length_is_truncation() {
        let v = json!({
            "model": "prov-2026-01",
            "choices": [{"message": {"content": "cut off mid"}, "finish_reason": "length"}],
            "usage": {"prompt_tokens": 10, "completion_tokens": 3}
        });
        let c = parse_response(&v, "m", 100).unwrap();
        assert!(c.truncated);
        assert_eq!(c.model_id, "prov-2026-01");
        let v = json!({"choices": [{"message": {"content": "a b c"}}]});
        let c = parse_response(&v, "m", 3).unwrap();
        assert!(c.truncated);
        assert_eq!(c.model_id, "m");
    }

    #[test]
    fn unreachable_provider_is_an_error() {
        let backend = HttpBackend::default();
        let req = CompletionRequest::new(Depth::Listen, "reply", vec![Message::human("h")], 8);
        let err = backend
            .complete("http://127.0.0.1:9", "m", None, 1, &req)
            .unwrap_err();
        assert!(matches!(err, GatewayError::Unreachable(_)));
    }
}
