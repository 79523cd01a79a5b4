//! Chat-completion adapters over HTTPS.

use serde_json::{json, Value};

use super::provider::{ChatRequest, ChatResponse, Provider, ProviderError, TokenUsage};

fn api_key(env: &str) -> Result<String, ProviderError> {
    std::env::var(env).map_err(|_| ProviderError::Fatal(format!("environment variable {env} is not set")))
}

fn map_error(e: ureq::Error) -> ProviderError {
    match e {
        ureq::Error::StatusCode(429) => ProviderError::RateLimited,
        ureq::Error::StatusCode(code) if code >= 500 => ProviderError::Transient(format!("HTTP {code}")),
        ureq::Error::StatusCode(code) => ProviderError::Fatal(format!("HTTP {code}")),
        other => ProviderError::Transient(other.to_string()),
    }
}

fn post_json(agent: &ureq::Agent, url: &str, headers: &[(&str, String)], body: &Value) -> Result<Value, ProviderError> {
    let mut req = agent.post(url);
    for (k, v) in headers {
        req = req.header(*k, v);
    }
    let mut resp = req.send_json(body).map_err(map_error)?;
    resp.body_mut().read_json::<Value>().map_err(|e| ProviderError::Transient(format!("bad response body: {e}")))
}

fn u64_at(v: &Value, path: &[&str]) -> u64 {
    let mut cur = v;
    for p in path {
        cur = &cur[*p];
    }
    cur.as_u64().unwrap_or(0)
}

/// Any endpoint speaking the `/chat/completions` wire format.
pub struct OpenAiCompatible {
    id: String,
    base_url: String,
    key_env: String,
    agent: ureq::Agent,
}

impl OpenAiCompatible {
    pub fn new(id: impl Into<String>, base_url: impl Into<String>, key_env: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            base_url: base_url.into().trim_end_matches('/').to_string(),
            key_env: key_env.into(),
            agent: ureq::Agent::new_with_defaults(),
        }
    }
}

impl Provider for OpenAiCompatible {
    fn id(&self) -> &str {
        &self.id
    }

    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let key = api_key(&self.key_env)?;
        let mut messages = Vec::new();
        if !request.system.is_empty() {
            messages.push(json!({"role": "system", "content": request.system}));
        }
        messages.push(json!({"role": "user", "content": request.user}));
        let mut body = json!({"model": request.model, "messages": messages});
        if let Some(t) = request.temperature {
            body["temperature"] = json!(t);
        }
        let url = format!("{}/chat/completions", self.base_url);
        let v = post_json(&self.agent, &url, &[("Authorization", format!("Bearer {key}"))], &body)?;
        let message = &v["choices"][0]["message"];
        let text = message["content"]
            .as_str()
            .ok_or_else(|| ProviderError::Transient("response has no message content".into()))?
            .to_string();
        Ok(ChatResponse {
            text,
            reasoning: message["reasoning_content"].as_str().map(str::to_string),
            usage: TokenUsage {
                prompt: u64_at(&v, &["usage", "prompt_tokens"]),
                completion: u64_at(&v, &["usage", "completion_tokens"]),
            },
        })
    }
}

/// The `/v1/messages` wire format.
pub struct Anthropic {
    id: String,
    base_url: String,
    key_env: String,
    max_tokens: u32,
    agent: ureq::Agent,
}

impl Anthropic {
    pub fn new(id: impl Into<String>, base_url: impl Into<String>, key_env: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            base_url: base_url.into().trim_end_matches('/').to_string(),
            key_env: key_env.into(),
            max_tokens: 2048,
            agent: ureq::Agent::new_with_defaults(),
        }
    }
}

impl Provider for Anthropic {
    fn id(&self) -> &str {
        &self.id
    }

    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let key = api_key(&self.key_env)?;
        let mut body = json!({
            "model": request.model,
            "max_tokens": self.max_tokens,
            "messages": [{"role": "user", "content": request.user}],
        });
        if !request.system.is_empty() {
            body["system"] = json!(request.system);
        }
        if let Some(t) = request.temperature {
            body["temperature"] = json!(t);
        }
        let url = format!("{}/v1/messages", self.base_url);
        let headers = [("x-api-key", key), ("anthropic-version", "2023-06-01".to_string())];
        let v = post_json(&self.agent, &url, &headers, &body)?;
        let blocks = v["content"].as_array().cloned().unwrap_or_default();
        let text: String = blocks.iter().filter(|b| b["type"] == "text").filter_map(|b| b["text"].as_str()).collect();
        let thinking: String =
            blocks.iter().filter(|b| b["type"] == "thinking").filter_map(|b| b["thinking"].as_str()).collect();
        if text.is_empty() {
            return Err(ProviderError::Transient("response has no text block".into()));
        }
        Ok(ChatResponse {
            text,
            reasoning: (!thinking.is_empty()).then_some(thinking),
            usage: TokenUsage {
                prompt: u64_at(&v, &["usage", "input_tokens"]),
                completion: u64_at(&v, &["usage", "output_tokens"]),
            },
        })
    }
}
