use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::survey::{DomainId, Outcome, Result, SurveyError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Questions {
    pub belief: String,
    pub sharing: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Headings {
    #[serde(default = "default_network")]
    pub network: String,
    #[serde(default)]
    pub composite_network: Option<String>,
    #[serde(default = "default_demographics")]
    pub demographics: String,
    #[serde(default = "default_attitudes")]
    pub attitudes: String,
    #[serde(default = "default_empty")]
    pub empty: String,
}

fn default_network() -> String {
    "Personal Network".into()
}
fn default_demographics() -> String {
    "Demographics".into()
}
fn default_attitudes() -> String {
    "Attitudes and Behaviors".into()
}
fn default_empty() -> String {
    "(none reported)".into()
}
fn default_contacts() -> String {
    "Contacts".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AwarenessStyle {
    /// One "x knows y, z" line per alter, from the tie set.
    Ties,
    /// A single ordinal rating of how well alters know one another.
    Perceived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkTemplate {
    #[serde(default = "default_contacts")]
    pub contacts_heading: String,
    /// Placeholders: `{n}` alter count, `{labels}` comma-joined labels.
    pub contacts_line: String,
    /// Placeholders: `{k}` discussant count, `{labels}`.
    #[serde(default)]
    pub discussant_line: Option<String>,
    pub awareness: AwarenessStyle,
    pub awareness_heading: String,
    #[serde(default)]
    pub awareness_prompt: Option<String>,
    pub profiles_heading: String,
    /// Only alters carrying this flag get a profile entry.
    #[serde(default)]
    pub profiles_flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompositeLine {
    Value { composite: String, text: String, decimals: usize },
    Percent { composite: String, text: String },
    Share { attribute: String, value: String, text: String },
    Breakdown { attribute: String, text: String },
    Level { composite: String, attribute: String, text: String },
}

/// Line-level prompt template for one domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    /// Placeholders: `{context}`, `{schema}`.
    pub system: String,
    /// Placeholders: `{profile}`, `{claim}`, `{question}`.
    pub user: String,
    pub questions: Questions,
    pub headings: Headings,
    pub network: NetworkTemplate,
    pub composite_lines: Vec<CompositeLine>,
}

const HEALTH: &str = include_str!("../../templates/health.toml");
const CLIMATE: &str = include_str!("../../templates/climate.toml");
const POLITICS: &str = include_str!("../../templates/politics.toml");

impl PromptTemplate {
    pub fn builtin(domain: DomainId) -> Self {
        Self::from_toml_str(Self::builtin_toml(domain)).expect("builtin templates parse")
    }

    pub fn builtin_toml(domain: DomainId) -> &'static str {
        match domain {
            DomainId::Health => HEALTH,
            DomainId::Climate => CLIMATE,
            DomainId::Politics => POLITICS,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SurveyError::Schema(format!("prompt template: {e}")))
    }

    /// Loads a template override file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SurveyError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn question(&self, outcome: Outcome) -> &str {
        match outcome {
            Outcome::Belief => &self.questions.belief,
            Outcome::Sharing => &self.questions.sharing,
        }
    }
}
