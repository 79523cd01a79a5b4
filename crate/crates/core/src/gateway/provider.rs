use serde::{Deserialize, Serialize};

/// Side information for providers that answer without reading the prompt
/// (mock and scripted providers). HTTP adapters ignore it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum TaskHint {
    None,
    Survey { min: i64, max: i64, reasoning_field: bool },
    Extraction { item_id: String, candidates: Vec<String>, chain: String },
    Direction { item_id: String, variable: String, target: String, span: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub system: String,
    pub user: String,
    pub temperature: Option<f64>,
    pub hint: TaskHint,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt: u64,
    pub completion: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChatResponse {
    pub text: String,
    /// Native reasoning content returned separately by reasoning models.
    pub reasoning: Option<String>,
    pub usage: TokenUsage,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("rate limited")]
    RateLimited,
    #[error("transient: {0}")]
    Transient(String),
    #[error("fatal: {0}")]
    Fatal(String),
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        !matches!(self, ProviderError::Fatal(_))
    }
}

pub trait Provider: Send + Sync {
    fn id(&self) -> &str;
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError>;
}
