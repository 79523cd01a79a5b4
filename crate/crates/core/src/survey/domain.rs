use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::scale::ScaleSpec;
use super::{Result, SurveyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainId {
    Health,
    Climate,
    Politics,
}

impl DomainId {
    pub const ALL: [DomainId; 3] = [DomainId::Health, DomainId::Climate, DomainId::Politics];

    pub fn as_str(self) -> &'static str {
        match self {
            DomainId::Health => "health",
            DomainId::Climate => "climate",
            DomainId::Politics => "politics",
        }
    }
}

impl fmt::Display for DomainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DomainId {
    type Err = SurveyError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "health" => Ok(DomainId::Health),
            "climate" => Ok(DomainId::Climate),
            "politics" | "political" => Ok(DomainId::Politics),
            other => Err(SurveyError::Schema(format!("unknown domain {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Belief,
    Sharing,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Belief, Outcome::Sharing];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Belief => "belief",
            Outcome::Sharing => "sharing",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = SurveyError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "belief" => Ok(Outcome::Belief),
            "sharing" => Ok(Outcome::Sharing),
            other => Err(SurveyError::Schema(format!("unknown outcome {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    Demographic,
    Attitudinal,
    Network,
}

impl Block {
    pub const ALL: [Block; 3] = [Block::Network, Block::Attitudinal, Block::Demographic];

    pub fn as_str(self) -> &'static str {
        match self {
            Block::Demographic => "demographic",
            Block::Attitudinal => "attitudinal",
            Block::Network => "network",
        }
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimItem {
    pub id: String,
    #[serde(skip_deserializing, default = "placeholder_domain")]
    pub domain: DomainId,
    pub text: String,
}

fn placeholder_domain() -> DomainId {
    DomainId::Health
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructDef {
    pub name: String,
    /// Heading used in item-level profiles when it differs from `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading: Option<String>,
    /// Stem printed above the item list ("Please state how much you trust:").
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intro: Option<String>,
    pub scale: ScaleSpec,
}

impl ConstructDef {
    pub fn heading(&self) -> &str {
        self.heading.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlterAttribute {
    pub key: String,
    pub label: String,
    /// Ordered levels for ordinal attributes, coded 1..=k.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompositeKind {
    Size {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        among_flag: Option<String>,
    },
    Density,
    Proportion {
        attribute: String,
        value: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        among_flag: Option<String>,
    },
    FlagShare {
        flag: String,
    },
    Mean {
        attribute: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        among_flag: Option<String>,
    },
    Awareness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: CompositeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSource {
    Numeric { field: String },
    Indicator { field: String, level: String },
    Ordinal { field: String, levels: Vec<String> },
    ConstructMean { construct: String },
    ConstructIndicator { construct: String, code: i64 },
    Network { composite: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub block: Block,
    #[serde(flatten)]
    pub source: FeatureSource,
}

/// Everything a survey domain declares: scales, claims, constructs, the
/// alter schema, network composites and the regression feature schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainConfig {
    pub id: DomainId,
    /// Country and fieldwork date, e.g. "the United States in Oct 2023".
    pub system_context: String,
    pub belief_scale: ScaleSpec,
    pub sharing_scale: ScaleSpec,
    pub claims: Vec<ClaimItem>,
    pub constructs: Vec<ConstructDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub awareness_scale: Option<ScaleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discussant_flag: Option<String>,
    pub alter_schema: Vec<AlterAttribute>,
    pub composites: Vec<CompositeSpec>,
    pub features: Vec<FeatureSpec>,
}

const HEALTH_TOML: &str = include_str!("../../domains/health.toml");
const CLIMATE_TOML: &str = include_str!("../../domains/climate.toml");
const POLITICS_TOML: &str = include_str!("../../domains/politics.toml");

impl DomainConfig {
    pub fn builtin(id: DomainId) -> Self {
        let text = match id {
            DomainId::Health => HEALTH_TOML,
            DomainId::Climate => CLIMATE_TOML,
            DomainId::Politics => POLITICS_TOML,
        };
        Self::from_toml_str(text).expect("builtin domain configs are valid")
    }

    pub fn builtin_toml(id: DomainId) -> &'static str {
        match id {
            DomainId::Health => HEALTH_TOML,
            DomainId::Climate => CLIMATE_TOML,
            DomainId::Politics => POLITICS_TOML,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: DomainConfig =
            toml::from_str(text).map_err(|e| SurveyError::Schema(format!("domain config: {e}")))?;
        for c in &mut cfg.claims {
            c.domain = cfg.id;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SurveyError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.belief_scale.validate()?;
        self.sharing_scale.validate()?;
        let mut ids = std::collections::BTreeSet::new();
        for c in &self.claims {
            if !ids.insert(c.id.as_str()) {
                return Err(SurveyError::Schema(format!("duplicate claim id {:?}", c.id)));
            }
        }
        if self.claims.is_empty() {
            return Err(SurveyError::Schema("domain declares no claims".into()));
        }
        for c in &self.constructs {
            c.scale.validate()?;
        }
        let mut names = std::collections::BTreeSet::new();
        for f in &self.features {
            if !names.insert(f.name.as_str()) {
                return Err(SurveyError::Schema(format!("duplicate feature {:?}", f.name)));
            }
            match &f.source {
                FeatureSource::ConstructMean { construct }
                | FeatureSource::ConstructIndicator { construct, .. } => {
                    if self.construct(construct).is_none() {
                        return Err(SurveyError::Schema(format!(
                            "feature {:?} uses unknown construct {construct:?}",
                            f.name
                        )));
                    }
                }
                FeatureSource::Network { composite } => {
                    if !self.composites.iter().any(|c| &c.name == composite) {
                        return Err(SurveyError::Schema(format!(
                            "feature {:?} uses unknown composite {composite:?}",
                            f.name
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn scale(&self, outcome: Outcome) -> &ScaleSpec {
        match outcome {
            Outcome::Belief => &self.belief_scale,
            Outcome::Sharing => &self.sharing_scale,
        }
    }

    pub fn claim(&self, id: &str) -> Option<&ClaimItem> {
        self.claims.iter().find(|c| c.id == id)
    }

    pub fn construct(&self, name: &str) -> Option<&ConstructDef> {
        self.constructs.iter().find(|c| c.name.eq_ignore_ascii_case(name))
    }

    pub fn alter_attribute(&self, key: &str) -> Option<&AlterAttribute> {
        self.alter_schema.iter().find(|a| a.key == key)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("domain config serializes")
    }
}
