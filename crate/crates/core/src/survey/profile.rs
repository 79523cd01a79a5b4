use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::domain::{DomainConfig, DomainId};
use super::{Result, SurveyError};

/// Scalar attribute value as it appears in profile files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Bool(bool),
    Number(f64),
    Text(String),
}

impl AttrValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AttrValue::Number(v) => Some(*v),
            AttrValue::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            AttrValue::Text(t) => t.trim().parse().ok(),
        }
    }

    pub fn matches(&self, level: &str) -> bool {
        match self {
            AttrValue::Text(t) => t.trim().eq_ignore_ascii_case(level.trim()),
            AttrValue::Bool(b) => {
                let l = level.trim();
                (*b && (l.eq_ignore_ascii_case("yes") || l.eq_ignore_ascii_case("true")))
                    || (!*b && (l.eq_ignore_ascii_case("no") || l.eq_ignore_ascii_case("false")))
            }
            AttrValue::Number(v) => level.trim().parse::<f64>().map(|l| l == *v).unwrap_or(false),
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Bool(true) => f.write_str("Yes"),
            AttrValue::Bool(false) => f.write_str("No"),
            AttrValue::Number(v) => write!(f, "{}", format_number(*v)),
            AttrValue::Text(t) => f.write_str(t),
        }
    }
}

/// Integers print without a decimal point; everything else uses the
/// shortest round-trip representation.
pub fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicField {
    pub name: String,
    pub value: AttrValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttitudeItem {
    pub prompt: String,
    pub response: i64,
    /// Display text for the response; falls back to the scale anchor label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttitudeConstruct {
    pub construct: String,
    pub items: Vec<AttitudeItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alter {
    pub label: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, AttrValue>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub flags: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EgoNetwork {
    #[serde(default)]
    pub alters: Vec<Alter>,
    #[serde(default)]
    pub ties: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub awareness: Option<i64>,
}

impl EgoNetwork {
    pub fn size(&self) -> usize {
        self.alters.len()
    }

    /// Unordered, deduplicated tie set.
    pub fn tie_set(&self) -> BTreeSet<(String, String)> {
        self.ties
            .iter()
            .map(|[a, b]| if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) })
            .collect()
    }

    pub fn alter(&self, label: &str) -> Option<&Alter> {
        self.alters.iter().find(|a| a.label == label)
    }

    /// Labels of alters tied to `label`, in alter listing order.
    pub fn neighbours(&self, label: &str) -> Vec<&str> {
        let ties = self.tie_set();
        self.alters
            .iter()
            .map(|a| a.label.as_str())
            .filter(|other| {
                *other != label && {
                    let key = if label <= *other {
                        (label.to_string(), other.to_string())
                    } else {
                        (other.to_string(), label.to_string())
                    };
                    ties.contains(&key)
                }
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut labels = BTreeSet::new();
        for a in &self.alters {
            if !labels.insert(a.label.as_str()) {
                return Err(SurveyError::Referential(format!("duplicate alter label {:?}", a.label)));
            }
        }
        for [a, b] in &self.ties {
            if a == b {
                return Err(SurveyError::Referential(format!("self-tie on alter {a:?}")));
            }
            for end in [a, b] {
                if !labels.contains(end.as_str()) {
                    return Err(SurveyError::Referential(format!(
                        "tie references unlisted alter {end:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RespondentProfile {
    pub id: String,
    pub domain: DomainId,
    pub demographics: Vec<DemographicField>,
    pub attitudes: Vec<AttitudeConstruct>,
    pub network: EgoNetwork,
}

impl RespondentProfile {
    pub fn demographic(&self, name: &str) -> Option<&AttrValue> {
        self.demographics
            .iter()
            .find(|d| d.name.eq_ignore_ascii_case(name))
            .map(|d| &d.value)
    }

    pub fn construct(&self, name: &str) -> Option<&AttitudeConstruct> {
        self.attitudes.iter().find(|c| c.construct.eq_ignore_ascii_case(name))
    }

    /// Checks the profile against its domain: item responses within the
    /// declared construct scales, alter attributes within the alter schema,
    /// and network referential integrity.
    pub fn validate(&self, domain: &DomainConfig) -> Result<()> {
        if self.domain != domain.id {
            return Err(SurveyError::DomainMismatch {
                expected: domain.id,
                found: self.domain,
            });
        }
        for c in &self.attitudes {
            let def = domain.construct(&c.construct).ok_or_else(|| {
                SurveyError::Schema(format!("profile {}: unknown construct {:?}", self.id, c.construct))
            })?;
            for item in &c.items {
                def.scale.check(item.response).map_err(|_| {
                    SurveyError::Schema(format!(
                        "profile {}: {:?} response {} outside {}",
                        self.id,
                        c.construct,
                        item.response,
                        def.scale.bounds_string()
                    ))
                })?;
            }
        }
        for alter in &self.network.alters {
            for (key, value) in &alter.attributes {
                if !domain.alter_schema.iter().any(|a| &a.key == key) {
                    return Err(SurveyError::Schema(format!(
                        "profile {}: alter {:?} has attribute {key:?} outside the alter schema",
                        self.id, alter.label
                    )));
                }
                if key == "age" && value.as_f64().is_some_and(|v| v < 0.0) {
                    return Err(SurveyError::Schema(format!(
                        "profile {}: alter {:?} has negative age",
                        self.id, alter.label
                    )));
                }
            }
        }
        if let (Some(aw), Some(scale)) = (self.network.awareness, &domain.awareness_scale) {
            scale.check(aw)?;
        }
        self.network.validate()
    }
}
