//! Provider-agnostic completion layer: structured-output parsing, retries
//! with exponential backoff, the append-only response cache and the
//! simulation grid runner.

mod cache;
mod http;
mod mock;
mod parse;
mod provider;
mod runner;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use cache::{CacheRecord, ResponseCache};
pub use http::{Anthropic, OpenAiCompatible};
pub use mock::{MockProvider, ScriptedProvider};
pub use parse::{first_json_object, parse_structured, ParseError, Structured};
pub use provider::{ChatRequest, ChatResponse, Provider, ProviderError, TaskHint, TokenUsage};
pub use runner::{
    run_simulation, write_reasoning_jsonl, CellSummary, ProviderSet, ReasoningChain, SimulationConfig,
    SimulationOutput,
};

use crate::prompt::{PromptBundle, PromptMode};
use crate::survey::{ModelMode, Outcome, PromptFormat, SurveyError};

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("cache {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cache line {line}: {message}")]
    CacheRecord { line: usize, message: String },
    #[error("no provider registered under {0:?}")]
    UnknownProvider(String),
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Survey(#[from] SurveyError),
}

pub type Result<T> = std::result::Result<T, GatewayError>;

fn default_retries() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub provider_id: String,
    pub model_name: String,
    pub mode: ModelMode,
    /// `None` leaves the provider default in place.
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

impl ModelSpec {
    /// Chat modes default to temperature 0; reasoning models keep the
    /// provider default.
    pub fn new(provider_id: impl Into<String>, model_name: impl Into<String>, mode: ModelMode) -> Self {
        Self {
            provider_id: provider_id.into(),
            model_name: model_name.into(),
            mode,
            temperature: (mode != ModelMode::Reasoning).then_some(0.0),
            max_retries: default_retries(),
        }
    }

    pub fn with_retries(mut self, n: u32) -> Self {
        self.max_retries = n;
        self
    }

    /// `provider/model@mode`.
    pub fn label(&self) -> String {
        format!("{}/{}@{}", self.provider_id, self.model_name, self.mode)
    }

    pub fn prompt_mode(&self) -> PromptMode {
        if self.mode.expects_reasoning_field() {
            PromptMode::Cot
        } else {
            PromptMode::Plain
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.temperature {
            if !(t >= 0.0) {
                return Err(GatewayError::InvalidSpec(format!("{}: temperature {t} < 0", self.label())));
            }
        }
        if self.provider_id.is_empty() || self.model_name.is_empty() {
            return Err(GatewayError::InvalidSpec("provider and model names must be non-empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RequestKey {
    pub respondent_id: String,
    pub claim_id: String,
    pub outcome: Outcome,
    /// Model label, see [`ModelSpec::label`].
    pub model: String,
    pub format: PromptFormat,
}

impl fmt::Display for RequestKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}|{}|{}|{}", self.respondent_id, self.claim_id, self.outcome, self.model, self.format)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompletionStatus {
    Ok,
    Invalid,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub request_key: RequestKey,
    pub raw_text: String,
    pub parsed_response: Option<i64>,
    pub reasoning_text: Option<String>,
    pub status: CompletionStatus,
    pub attempts: u32,
    pub token_usage: TokenUsage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cause: Option<String>,
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { base_delay_ms: 500, max_delay_ms: 30_000 }
    }
}

impl RetryPolicy {
    pub fn immediate() -> Self {
        Self { base_delay_ms: 0, max_delay_ms: 0 }
    }

    /// Delay before retry number `attempt` (1-based).
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u64.checked_shl(attempt.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }
}

/// Terminal outcome of a retried provider call.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempted<T> {
    pub value: Option<T>,
    pub status: CompletionStatus,
    pub attempts: u32,
    pub last_text: String,
    pub native_reasoning: Option<String>,
    pub usage: TokenUsage,
    pub cause: Option<String>,
}

/// Sends `request` up to `max_retries + 1` times. Transport errors and
/// parse failures are both retried; the terminal status reflects the last
/// failure kind.
pub fn call_with_retries<T>(
    provider: &dyn Provider,
    request: &ChatRequest,
    max_retries: u32,
    policy: &RetryPolicy,
    parse: impl Fn(&str) -> std::result::Result<T, String>,
) -> Attempted<T> {
    let mut out = Attempted {
        value: None,
        status: CompletionStatus::Failed,
        attempts: 0,
        last_text: String::new(),
        native_reasoning: None,
        usage: TokenUsage::default(),
        cause: None,
    };
    for attempt in 0..=max_retries {
        if attempt > 0 {
            let d = policy.delay(attempt);
            if !d.is_zero() {
                std::thread::sleep(d);
            }
        }
        out.attempts += 1;
        match provider.chat(request) {
            Ok(resp) => {
                out.usage.prompt += resp.usage.prompt;
                out.usage.completion += resp.usage.completion;
                out.native_reasoning = resp.reasoning;
                match parse(&resp.text) {
                    Ok(v) => {
                        out.value = Some(v);
                        out.status = CompletionStatus::Ok;
                        out.cause = None;
                        out.last_text = resp.text;
                        return out;
                    }
                    Err(e) => {
                        out.status = CompletionStatus::Invalid;
                        out.cause = Some(e);
                        out.last_text = resp.text;
                    }
                }
            }
            Err(e) => {
                log::debug!("{} attempt {}: {e}", request.model, out.attempts);
                out.status = CompletionStatus::Failed;
                out.cause = Some(e.to_string());
                if !e.is_retryable() {
                    return out;
                }
            }
        }
    }
    out
}

pub fn survey_request(bundle: &PromptBundle, spec: &ModelSpec) -> ChatRequest {
    ChatRequest {
        model: spec.model_name.clone(),
        system: bundle.system_text.clone(),
        user: bundle.user_text.clone(),
        temperature: spec.temperature,
        hint: TaskHint::Survey {
            min: bundle.scale.min,
            max: bundle.scale.max,
            reasoning_field: bundle.expects_reasoning(),
        },
    }
}

pub fn request_key(bundle: &PromptBundle, spec: &ModelSpec) -> RequestKey {
    RequestKey {
        respondent_id: bundle.respondent_id.clone(),
        claim_id: bundle.claim_id.clone(),
        outcome: bundle.outcome,
        model: spec.label(),
        format: bundle.format,
    }
}

/// One survey completion with retries.
pub fn complete(provider: &dyn Provider, bundle: &PromptBundle, spec: &ModelSpec, policy: &RetryPolicy) -> CompletionResult {
    let request = survey_request(bundle, spec);
    let expect = bundle.expects_reasoning();
    let r = call_with_retries(provider, &request, spec.max_retries, policy, |text| {
        parse_structured(text, expect, &bundle.scale).map_err(|e| e.to_string())
    });
    let (parsed, reasoning) = match r.value {
        Some(s) => (Some(s.response), s.reasoning.or(r.native_reasoning)),
        None => (None, None),
    };
    CompletionResult {
        request_key: request_key(bundle, spec),
        raw_text: r.last_text,
        parsed_response: parsed,
        reasoning_text: reasoning,
        status: r.status,
        attempts: r.attempts,
        token_usage: r.usage,
        cause: r.cause,
        temperature: spec.temperature,
    }
}
