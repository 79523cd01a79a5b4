use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use simdiverge::gateway::{ModelSpec, RetryPolicy};
use simdiverge::lens::FitConfig;
use simdiverge::survey::{DomainId, Outcome, PromptFormat};

use crate::Error;

fn default_out() -> PathBuf {
    PathBuf::from("runs/latest")
}
fn default_bins() -> usize {
    20
}
fn default_top_k() -> usize {
    7
}
fn default_concurrency() -> usize {
    4
}
fn default_formats() -> Vec<PromptFormat> {
    PromptFormat::ALL.to_vec()
}
fn default_outcomes() -> Vec<Outcome> {
    Outcome::ALL.to_vec()
}
fn default_min_support() -> usize {
    5
}
fn default_spans_per_variable() -> usize {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthPreset {
    PaperPattern,
    TargetR2,
    AmplifiedTrust,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSource {
    pub preset: SynthPreset,
    pub n: usize,
    pub seed: u64,
    /// Only read by the `target_r2` preset.
    #[serde(default)]
    pub r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSource {
    pub id: DomainId,
    #[serde(default)]
    pub profiles: Option<PathBuf>,
    #[serde(default)]
    pub responses: Option<PathBuf>,
    /// Domain TOML replacing the builtin one.
    #[serde(default)]
    pub config: Option<PathBuf>,
    /// Prompt template override.
    #[serde(default)]
    pub template: Option<PathBuf>,
    #[serde(default)]
    pub synth: Option<SynthSource>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Mock,
    Openai,
    Anthropic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub id: String,
    pub kind: ProviderKind,
    #[serde(default)]
    pub base_url: Option<String>,
    #[serde(default)]
    pub key_env: Option<String>,
    /// Mock providers only.
    #[serde(default)]
    pub failure_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    #[serde(default)]
    pub variables: Option<PathBuf>,
    #[serde(default)]
    pub annotators: Vec<ModelSpec>,
    /// spans.jsonl; synthetic fixture spans are used when absent.
    #[serde(default)]
    pub spans: Option<PathBuf>,
    #[serde(default = "default_spans_per_variable")]
    pub synth_spans_per_variable: usize,
    #[serde(default = "default_min_support")]
    pub min_support: usize,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default)]
    pub human_extraction: Option<PathBuf>,
    #[serde(default)]
    pub human_direction: Option<PathBuf>,
}

impl Default for TraceConfig {
    fn default() -> Self {
        toml::from_str("").expect("all trace fields default")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_formats")]
    pub formats: Vec<PromptFormat>,
    #[serde(default = "default_outcomes")]
    pub outcomes: Vec<Outcome>,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    pub domains: Vec<DomainSource>,
    #[serde(default)]
    pub providers: Vec<ProviderConfig>,
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub lens: FitConfig,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default)]
    pub trace: TraceConfig,
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, Error> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(path.to_path_buf(), e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.out.is_relative() {
            cfg.out = base.join(&cfg.out);
        }
        for d in &mut cfg.domains {
            for p in [&mut d.profiles, &mut d.responses, &mut d.config, &mut d.template] {
                rebase(base, p);
            }
        }
        let t = &mut cfg.trace;
        for p in [&mut t.variables, &mut t.spans, &mut t.human_extraction, &mut t.human_direction] {
            rebase(base, p);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: String| Err(Error::Config(m));
        if self.domains.is_empty() {
            return bad("at least one [[domains]] entry is required".into());
        }
        for (i, d) in self.domains.iter().enumerate() {
            if self.domains[..i].iter().any(|o| o.id == d.id) {
                return bad(format!("domain {} listed twice", d.id));
            }
            let files = d.profiles.is_some() && d.responses.is_some();
            if files == d.synth.is_some() {
                return bad(format!("domain {}: give either profiles+responses or synth", d.id));
            }
        }
        for m in self.models.iter().chain(&self.trace.annotators) {
            if !self.providers.iter().any(|p| p.id == m.provider_id) {
                return bad(format!("model {} names unknown provider {:?}", m.model_name, m.provider_id));
            }
        }
        if !self.trace.annotators.is_empty() && self.trace.annotators.len() != 3 {
            return bad(format!("trace needs exactly 3 annotators, got {}", self.trace.annotators.len()));
        }
        if self.bins < 2 {
            return bad("bins must be at least 2".into());
        }
        Ok(())
    }
}
