use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Result, TraceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Demographics,
    Attitudinal,
    Behavioral,
    Network,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::Demographics, Category::Attitudinal, Category::Behavioral, Category::Network];

    pub fn heading(self) -> &'static str {
        match self {
            Category::Demographics => "Demographics",
            Category::Attitudinal => "Attitudinal",
            Category::Behavioral => "Behavioral",
            Category::Network => "Network Characteristics",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.heading())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateVariable {
    #[serde(rename = "name")]
    pub canonical_name: String,
    pub category: Category,
    pub aliases: Vec<String>,
    /// Reference-category instruction for the direction prompt.
    #[serde(default, rename = "reference")]
    pub reference_convention: Option<String>,
}

impl CandidateVariable {
    pub fn matches(&self, label: &str) -> bool {
        let l = label.trim().to_lowercase();
        self.canonical_name.to_lowercase() == l || self.aliases.iter().any(|a| a.to_lowercase() == l)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableRoster {
    pub variables: Vec<CandidateVariable>,
}

const BUILTIN: &str = include_str!("../../variables.toml");

impl VariableRoster {
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN).expect("builtin roster is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let roster: VariableRoster = toml::from_str(text).map_err(|e| TraceError::Roster(e.to_string()))?;
        roster.validate()?;
        Ok(roster)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| TraceError::Io(path.display().to_string(), e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for v in &self.variables {
            if !seen.insert(v.canonical_name.to_lowercase()) {
                return Err(TraceError::Roster(format!("duplicate variable {:?}", v.canonical_name)));
            }
            if v.aliases.is_empty() {
                return Err(TraceError::Roster(format!("variable {:?} has no aliases", v.canonical_name)));
            }
        }
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.canonical_name.clone()).collect()
    }

    pub fn get(&self, canonical: &str) -> Option<&CandidateVariable> {
        self.variables.iter().find(|v| v.canonical_name == canonical)
    }

    /// Case-insensitive exact match against canonical names, then aliases.
    pub fn resolve(&self, label: &str) -> Option<&CandidateVariable> {
        let l = label.trim().to_lowercase();
        self.variables
            .iter()
            .find(|v| v.canonical_name.to_lowercase() == l)
            .or_else(|| self.variables.iter().find(|v| v.matches(label)))
    }

    pub fn in_category(&self, category: Category) -> impl Iterator<Item = &CandidateVariable> {
        self.variables.iter().filter(move |v| v.category == category)
    }
}
