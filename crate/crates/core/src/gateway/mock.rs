//! Deterministic offline providers.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde_json::json;
use sha2::{Digest, Sha256};

use super::provider::{ChatRequest, ChatResponse, Provider, ProviderError, TaskHint, TokenUsage};

const DEFAULT_VOCABULARY: &[&str] = &[
    "trust in science",
    "political leaning",
    "social media use",
    "health literacy",
    "education",
    "age",
    "gender",
    "income",
    "health media exposure",
    "network size",
    "network density",
    "issue-specific discussants",
    "mutual awareness",
    "systematic processing",
];

fn h64(parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0x1f]);
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 8 bytes"))
}

fn unit(parts: &[&str]) -> f64 {
    (h64(parts) >> 11) as f64 / (1u64 << 53) as f64
}

/// Hash-driven provider that answers survey, extraction and direction tasks
/// from the request hint, with optional transient-failure injection.
pub struct MockProvider {
    id: String,
    seed: String,
    failure_rate: f64,
    extraction_dropout: f64,
    direction_disagreement: f64,
    vocabulary: Vec<String>,
    calls: AtomicUsize,
    attempts: Mutex<HashMap<u64, u32>>,
}

impl MockProvider {
    pub fn new(id: impl Into<String>, seed: u64) -> Self {
        Self {
            id: id.into(),
            seed: seed.to_string(),
            failure_rate: 0.0,
            extraction_dropout: 0.15,
            direction_disagreement: 0.2,
            vocabulary: DEFAULT_VOCABULARY.iter().map(|s| s.to_string()).collect(),
            calls: AtomicUsize::new(0),
            attempts: Mutex::new(HashMap::new()),
        }
    }

    /// Fraction of attempts that fail with a transient error.
    pub fn with_failure_rate(mut self, rate: f64) -> Self {
        self.failure_rate = rate;
        self
    }

    pub fn with_vocabulary(mut self, words: Vec<String>) -> Self {
        self.vocabulary = words;
        self
    }

    pub fn with_annotator_noise(mut self, extraction_dropout: f64, direction_disagreement: f64) -> Self {
        self.extraction_dropout = extraction_dropout;
        self.direction_disagreement = direction_disagreement;
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn reasoning_text(&self, model: &str, user: &str) -> String {
        let n = 2 + (h64(&[&self.seed, "n", model, user]) % 4) as usize;
        let mut picked: Vec<&str> = Vec::new();
        let mut k = 0u32;
        while picked.len() < n.min(self.vocabulary.len()) {
            let i = (h64(&[&self.seed, "v", model, user, &k.to_string()]) % self.vocabulary.len() as u64) as usize;
            if !picked.contains(&self.vocabulary[i].as_str()) {
                picked.push(&self.vocabulary[i]);
            }
            k += 1;
        }
        format!(
            "Considering the respondent's {}, I estimate how they would judge this claim.",
            picked.join(", ")
        )
    }

    fn survey(&self, req: &ChatRequest, min: i64, max: i64, reasoning_field: bool) -> ChatResponse {
        let span = (max - min + 1) as u64;
        let value = min + (h64(&[&self.seed, "r", &req.model, &req.user]) % span) as i64;
        let reasoning = self.reasoning_text(&req.model, &req.user);
        let style = h64(&[&self.seed, "s", &req.model, &req.user]) % 3;
        let mut obj = serde_json::Map::new();
        if reasoning_field {
            obj.insert("reasoning".into(), json!(reasoning));
        }
        obj.insert("response".into(), if style == 1 { json!(value.to_string()) } else { json!(value) });
        let body = serde_json::Value::Object(obj).to_string();
        let text = if style == 2 { format!("```json\n{body}\n```") } else { body };
        ChatResponse {
            text,
            reasoning: (!reasoning_field).then_some(reasoning),
            usage: TokenUsage { prompt: (req.user.len() / 4) as u64, completion: 12 },
        }
    }

    fn extraction(&self, req: &ChatRequest, item_id: &str, candidates: &[String], chain: &str) -> ChatResponse {
        let lower = chain.to_lowercase();
        let selected: Vec<&String> = candidates
            .iter()
            .filter(|c| lower.contains(&c.to_lowercase()))
            .filter(|c| unit(&[&self.seed, "drop", &req.model, item_id, c]) >= self.extraction_dropout)
            .collect();
        let text = json!({"reasoning": "Variables named in the chain.", "label": selected}).to_string();
        ChatResponse { text, reasoning: None, usage: TokenUsage::default() }
    }

    fn direction(&self, req: &ChatRequest, item_id: &str) -> ChatResponse {
        const LABELS: [&str; 3] = ["Positive", "Neutral", "Negative"];
        let mut i = (h64(&[&self.seed, "dir", item_id]) % 3) as usize;
        if unit(&[&self.seed, "dis", &req.model, item_id]) < self.direction_disagreement {
            i = (i + 1 + (h64(&[&self.seed, "alt", &req.model, item_id]) % 2) as usize) % 3;
        }
        let text = json!({"reasoning": "Direction implied by the span.", "label": LABELS[i]}).to_string();
        ChatResponse { text, reasoning: None, usage: TokenUsage::default() }
    }
}

impl Provider for MockProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let key = h64(&[&req.model, &req.system, &req.user]);
        let attempt = {
            let mut map = self.attempts.lock().expect("attempt map");
            let e = map.entry(key).or_insert(0);
            *e += 1;
            *e
        };
        if self.failure_rate > 0.0
            && unit(&[&self.seed, "fail", &key.to_string(), &attempt.to_string()]) < self.failure_rate
        {
            return Err(ProviderError::Transient("injected failure".into()));
        }
        Ok(match &req.hint {
            TaskHint::Survey { min, max, reasoning_field } => self.survey(req, *min, *max, *reasoning_field),
            TaskHint::Extraction { item_id, candidates, chain } => self.extraction(req, item_id, candidates, chain),
            TaskHint::Direction { item_id, .. } => self.direction(req, item_id),
            TaskHint::None => ChatResponse { text: "{}".into(), ..Default::default() },
        })
    }
}

/// Replays fixed outputs keyed by (model, item id).
#[derive(Default)]
pub struct ScriptedProvider {
    id: String,
    outputs: HashMap<(String, String), String>,
    calls: AtomicUsize,
}

impl ScriptedProvider {
    pub fn new(id: impl Into<String>) -> Self {
        Self { id: id.into(), ..Default::default() }
    }

    pub fn script(&mut self, model: &str, item_id: &str, output: impl Into<String>) {
        self.outputs.insert((model.to_string(), item_id.to_string()), output.into());
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Provider for ScriptedProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let item = match &req.hint {
            TaskHint::Extraction { item_id, .. } | TaskHint::Direction { item_id, .. } => item_id.clone(),
            _ => String::new(),
        };
        self.outputs
            .get(&(req.model.clone(), item))
            .map(|t| ChatResponse { text: t.clone(), ..Default::default() })
            .ok_or_else(|| ProviderError::Fatal(format!("no scripted output for {}", req.model)))
    }
}
