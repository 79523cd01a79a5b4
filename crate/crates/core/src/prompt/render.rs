use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::template::{AwarenessStyle, CompositeLine, PromptTemplate};
use crate::survey::{
    compute_network_composites, AttitudeItem, ClaimItem, CompositeValues, ConstructDef, DomainConfig, DomainId,
    Outcome, PromptFormat, RespondentProfile, Result, ScaleSpec, SurveyError,
};

const SCHEMA_PLAIN: &str = r#"{"response": "integer"}"#;
const SCHEMA_COT: &str = r#"{"reasoning": "string", "response": "integer"}"#;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    Plain,
    Cot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub domain: DomainId,
    pub respondent_id: String,
    pub claim_id: String,
    pub outcome: Outcome,
    pub format: PromptFormat,
    pub mode: PromptMode,
    pub system_text: String,
    pub user_text: String,
    pub expected_fields: Vec<String>,
    pub scale: ScaleSpec,
}

impl PromptBundle {
    pub fn expects_reasoning(&self) -> bool {
        self.expected_fields.iter().any(|f| f == "reasoning")
    }

    /// Hex SHA-256 over the exact prompt bytes.
    pub fn prompt_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.system_text.as_bytes());
        h.update([0u8]);
        h.update(self.user_text.as_bytes());
        hex::encode(h.finalize())
    }
}

/// Construct mean rounded to one decimal, with its scale bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructScore {
    pub construct: String,
    pub mean: f64,
    pub bounds: String,
}

pub fn round_to(v: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (v * f).round() / f
}

/// Unweighted item means per construct, in profile order. Constructs with
/// no items, or unknown to the domain, are skipped.
pub fn composite_construct_scores(profile: &RespondentProfile, domain: &DomainConfig) -> Vec<ConstructScore> {
    let mut out = Vec::new();
    for c in &profile.attitudes {
        let Some(def) = domain.construct(&c.construct) else {
            log::warn!("construct {:?} not declared for {}", c.construct, domain.id);
            continue;
        };
        if c.items.is_empty() {
            log::warn!("construct {:?} of {} has no items", c.construct, profile.id);
            continue;
        }
        let mean = c.items.iter().map(|i| i.response as f64).sum::<f64>() / c.items.len() as f64;
        out.push(ConstructScore {
            construct: def.name.clone(),
            mean: round_to(mean, 1),
            bounds: def.scale.bounds_string(),
        });
    }
    out
}

fn bullet(s: impl AsRef<str>) -> String {
    format!("- {}", s.as_ref())
}

fn missing() -> String {
    "not available".into()
}

fn percent(v: f64) -> String {
    format!("{:.0}%", v * 100.0)
}

fn fill(template: &str, pairs: &[(&str, &str)]) -> String {
    let mut s = template.to_string();
    for (k, v) in pairs {
        s = s.replace(&format!("{{{k}}}"), v);
    }
    s
}

/// Renders profiles and prompts for one domain.
#[derive(Debug, Clone)]
pub struct PromptForge {
    pub domain: DomainConfig,
    pub template: PromptTemplate,
}

impl PromptForge {
    pub fn new(domain: DomainConfig, template: PromptTemplate) -> Self {
        Self { domain, template }
    }

    pub fn builtin(domain: DomainId) -> Self {
        Self::new(DomainConfig::builtin(domain), PromptTemplate::builtin(domain))
    }

    fn item_display(&self, def: Option<&ConstructDef>, item: &AttitudeItem) -> String {
        if let Some(l) = &item.label {
            return l.clone();
        }
        def.and_then(|d| d.scale.label_for(item.response))
            .map(str::to_string)
            .unwrap_or_else(|| item.response.to_string())
    }

    fn demographics_block(&self, profile: &RespondentProfile) -> Vec<String> {
        let mut lines = vec![self.template.headings.demographics.clone()];
        if profile.demographics.is_empty() {
            lines.push(self.template.headings.empty.clone());
        }
        for d in &profile.demographics {
            lines.push(bullet(format!("{}: {}", d.name, d.value)));
        }
        lines
    }

    fn attitudes_items(&self, profile: &RespondentProfile) -> Vec<String> {
        let mut lines = vec![self.template.headings.attitudes.clone()];
        if profile.attitudes.is_empty() {
            lines.push(self.template.headings.empty.clone());
        }
        for c in &profile.attitudes {
            let def = self.domain.construct(&c.construct);
            lines.push(def.map_or(c.construct.as_str(), |d| d.heading()).to_string());
            if let Some(intro) = def.and_then(|d| d.intro.as_ref()) {
                lines.push(intro.clone());
            }
            if c.items.is_empty() {
                lines.push(self.template.headings.empty.clone());
            }
            for item in &c.items {
                lines.push(bullet(format!("{}: {}", item.prompt, self.item_display(def, item))));
            }
        }
        lines
    }

    fn attitudes_composite(&self, profile: &RespondentProfile) -> Vec<String> {
        let mut lines = vec![self.template.headings.attitudes.clone()];
        let scores = composite_construct_scores(profile, &self.domain);
        if scores.is_empty() {
            lines.push(self.template.headings.empty.clone());
        }
        for s in scores {
            lines.push(bullet(format!("{} ({} scale): {:.1}", s.construct, s.bounds, s.mean)));
        }
        lines
    }

    fn network_items(&self, profile: &RespondentProfile) -> Vec<String> {
        let t = &self.template.network;
        let net = &profile.network;
        let empty = &self.template.headings.empty;
        let mut lines = vec![self.template.headings.network.clone()];
        if net.alters.is_empty() {
            lines.push(empty.clone());
            return lines;
        }
        lines.push(t.contacts_heading.clone());
        let labels: Vec<&str> = net.alters.iter().map(|a| a.label.as_str()).collect();
        lines.push(bullet(fill(&t.contacts_line, &[("n", &labels.len().to_string()), ("labels", &labels.join(", "))])));
        if let (Some(line), Some(flag)) = (&t.discussant_line, &self.domain.discussant_flag) {
            let disc: Vec<&str> =
                net.alters.iter().filter(|a| a.flags.contains(flag)).map(|a| a.label.as_str()).collect();
            let joined = if disc.is_empty() { "none".to_string() } else { disc.join(", ") };
            lines.push(bullet(fill(line, &[("k", &disc.len().to_string()), ("labels", &joined)])));
        }

        lines.push(t.awareness_heading.clone());
        match t.awareness {
            AwarenessStyle::Ties => {
                let before = lines.len();
                for a in &net.alters {
                    let nb = net.neighbours(&a.label);
                    if !nb.is_empty() {
                        lines.push(bullet(format!("{} knows {}", a.label, nb.join(", "))));
                    }
                }
                if lines.len() == before {
                    lines.push(empty.clone());
                }
            }
            AwarenessStyle::Perceived => match net.awareness {
                Some(v) => {
                    let label = self
                        .domain
                        .awareness_scale
                        .as_ref()
                        .and_then(|s| s.label_for(v))
                        .map(str::to_string)
                        .unwrap_or_else(|| v.to_string());
                    match &t.awareness_prompt {
                        Some(p) => lines.push(bullet(format!("{p}: {label}"))),
                        None => lines.push(bullet(label)),
                    }
                }
                None => lines.push(empty.clone()),
            },
        }

        lines.push(t.profiles_heading.clone());
        let before = lines.len();
        for a in &net.alters {
            if t.profiles_flag.as_ref().is_some_and(|f| !a.flags.contains(f)) {
                continue;
            }
            lines.push(a.label.clone());
            for attr in &self.domain.alter_schema {
                if let Some(v) = a.attributes.get(&attr.key) {
                    lines.push(bullet(format!("{}: {}", attr.label, v)));
                }
            }
        }
        if lines.len() == before {
            lines.push(empty.clone());
        }
        lines
    }

    fn composite_line(&self, line: &CompositeLine, profile: &RespondentProfile, values: &CompositeValues) -> String {
        let get = |name: &str| values.get(name).copied().flatten();
        let alters = &profile.network.alters;
        match line {
            CompositeLine::Value { composite, text, decimals } => {
                let v = get(composite).map_or_else(missing, |v| format!("{v:.*}", *decimals));
                format!("{text}: {v}")
            }
            CompositeLine::Percent { composite, text } => {
                format!("{text}: {}", get(composite).map_or_else(missing, percent))
            }
            CompositeLine::Share { attribute, value, text } => {
                let obs: Vec<bool> =
                    alters.iter().filter_map(|a| a.attributes.get(attribute)).map(|v| v.matches(value)).collect();
                let v = if obs.is_empty() {
                    missing()
                } else {
                    percent(obs.iter().filter(|b| **b).count() as f64 / obs.len() as f64)
                };
                format!("{text}: {v}")
            }
            CompositeLine::Breakdown { attribute, text } => {
                let mut counts: Vec<(String, usize)> = Vec::new();
                for v in alters.iter().filter_map(|a| a.attributes.get(attribute)) {
                    let key = v.to_string();
                    match counts.iter_mut().find(|(k, _)| *k == key) {
                        Some((_, c)) => *c += 1,
                        None => counts.push((key, 1)),
                    }
                }
                let total: usize = counts.iter().map(|(_, c)| c).sum();
                if total == 0 {
                    return format!("{text}: {}", missing());
                }
                let parts: Vec<String> =
                    counts.iter().map(|(k, c)| format!("{k} {}", percent(*c as f64 / total as f64))).collect();
                format!("{text}: {}", parts.join(", "))
            }
            CompositeLine::Level { composite, attribute, text } => {
                let levels = self.domain.alter_attribute(attribute).map(|a| a.levels.as_slice()).unwrap_or(&[]);
                let v = match get(composite) {
                    Some(m) if !levels.is_empty() => {
                        let idx = (m.round() as i64 - 1).clamp(0, levels.len() as i64 - 1) as usize;
                        levels[idx].clone()
                    }
                    Some(m) => format!("{m:.1}"),
                    None => missing(),
                };
                format!("{text}: {v}")
            }
        }
    }

    fn network_composite(&self, profile: &RespondentProfile) -> Vec<String> {
        let heading = self
            .template
            .headings
            .composite_network
            .clone()
            .unwrap_or_else(|| self.template.headings.network.clone());
        let mut lines = vec![heading];
        if profile.network.alters.is_empty() {
            lines.push(self.template.headings.empty.clone());
            return lines;
        }
        let values = compute_network_composites(&profile.network, &self.domain);
        for l in &self.template.composite_lines {
            lines.push(bullet(self.composite_line(l, profile, &values)));
        }
        lines
    }

    /// The three profile blocks in the order `format` prescribes.
    pub fn profile_blocks(&self, profile: &RespondentProfile, format: PromptFormat) -> Vec<Vec<String>> {
        match format {
            PromptFormat::Original => vec![
                self.network_items(profile),
                self.demographics_block(profile),
                self.attitudes_items(profile),
            ],
            PromptFormat::AltOrder => vec![
                self.demographics_block(profile),
                self.attitudes_items(profile),
                self.network_items(profile),
            ],
            PromptFormat::Composite => vec![
                self.network_composite(profile),
                self.demographics_block(profile),
                self.attitudes_composite(profile),
            ],
        }
    }

    pub fn render_profile(&self, profile: &RespondentProfile, format: PromptFormat) -> String {
        self.profile_blocks(profile, format)
            .into_iter()
            .map(|b| b.join("\n"))
            .collect::<Vec<_>>()
            .join("\n\n")
    }

    pub fn system_text(&self, mode: PromptMode) -> String {
        let schema = match mode {
            PromptMode::Plain => SCHEMA_PLAIN,
            PromptMode::Cot => SCHEMA_COT,
        };
        fill(&self.template.system, &[("context", &self.domain.system_context), ("schema", schema)])
    }

    pub fn assemble_prompt(
        &self,
        profile: &RespondentProfile,
        claim: &ClaimItem,
        outcome: Outcome,
        format: PromptFormat,
        mode: PromptMode,
    ) -> Result<PromptBundle> {
        if profile.domain != self.domain.id {
            return Err(SurveyError::DomainMismatch { expected: self.domain.id, found: profile.domain });
        }
        if claim.domain != self.domain.id {
            return Err(SurveyError::DomainMismatch { expected: self.domain.id, found: claim.domain });
        }
        // Claim text goes in last so braces inside it are never treated as placeholders.
        let user_text = fill(
            &self.template.user,
            &[("profile", &self.render_profile(profile, format)), ("question", self.template.question(outcome))],
        )
        .replace("{claim}", &claim.text);
        let expected_fields = match mode {
            PromptMode::Plain => vec!["response".to_string()],
            PromptMode::Cot => vec!["reasoning".to_string(), "response".to_string()],
        };
        Ok(PromptBundle {
            domain: self.domain.id,
            respondent_id: profile.id.clone(),
            claim_id: claim.id.clone(),
            outcome,
            format,
            mode,
            system_text: self.system_text(mode),
            user_text,
            expected_fields,
            scale: self.domain.scale(outcome).clone(),
        })
    }
}
