use std::collections::BTreeSet;
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::variables::{CandidateVariable, VariableRoster};
use super::{Result, TraceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Misinformation,
    Disinformation,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::Misinformation => "misinformation",
            Target::Disinformation => "disinformation",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const TEMPLATES: [(&str, Target); 4] = [
    ("{variable} and misinformation", Target::Misinformation),
    ("misinformation and {variable}", Target::Misinformation),
    ("{variable} and disinformation", Target::Disinformation),
    ("disinformation and {variable}", Target::Disinformation),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub variable: String,
    pub alias: String,
    pub template: String,
    pub target: Target,
    pub text: String,
}

impl Query {
    pub fn terms(&self) -> [&str; 2] {
        [self.alias.as_str(), self.target.as_str()]
    }
}

/// Four template queries per distinct alias.
pub fn generate_queries(variable: &CandidateVariable) -> Vec<Query> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for alias in &variable.aliases {
        for (template, target) in TEMPLATES {
            let text = template.replace("{variable}", alias);
            if seen.insert(text.to_lowercase()) {
                out.push(Query {
                    variable: variable.canonical_name.clone(),
                    alias: alias.clone(),
                    template: template.to_string(),
                    target,
                    text,
                });
            }
        }
    }
    out
}

/// A retrieved span as ingested from `spans.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSpan {
    #[serde(default)]
    pub span_id: Option<String>,
    pub text: String,
    /// Query the span was retrieved for; unset spans are tested against all.
    #[serde(default)]
    pub query: Option<String>,
    #[serde(default)]
    pub provenance: serde_json::Value,
}

impl RawSpan {
    pub fn new(text: impl Into<String>) -> Self {
        Self { span_id: None, text: text.into(), query: None, provenance: serde_json::Value::Null }
    }
}

pub fn read_spans_jsonl(path: &Path) -> Result<Vec<RawSpan>> {
    let file = std::fs::File::open(path).map_err(|e| TraceError::Io(path.display().to_string(), e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| TraceError::Io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let span = serde_json::from_str(&line).map_err(|e| TraceError::Json { line: i + 1, message: e.to_string() })?;
        out.push(span);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpan {
    pub span_id: String,
    pub text: String,
    pub matched_variable: String,
    pub matched_alias: String,
    pub matched_template: String,
    pub target: Target,
}

pub fn span_id(text: &str) -> String {
    hex::encode(&Sha256::digest(text.as_bytes())[..6])
}

fn contains_all(text: &str, terms: &[&str]) -> bool {
    let lower = text.to_lowercase();
    terms.iter().all(|t| lower.contains(&t.to_lowercase()))
}

fn to_span(id: Option<&str>, text: &str, query: &Query) -> CorpusSpan {
    CorpusSpan {
        span_id: id.map_or_else(|| span_id(text), str::to_string),
        text: text.to_string(),
        matched_variable: query.variable.clone(),
        matched_alias: query.alias.clone(),
        matched_template: query.template.clone(),
        target: query.target,
    }
}

/// Spans containing every query term (case-insensitive), one per distinct text.
pub fn filter_spans<S: AsRef<str>>(raw_spans: &[S], query: &Query) -> Vec<CorpusSpan> {
    let mut seen = BTreeSet::new();
    raw_spans
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| contains_all(t, &query.terms()))
        .filter(|t| seen.insert(t.to_string()))
        .map(|t| to_span(None, t, query))
        .collect()
}

/// Runs every roster query over the ingested spans and keeps the first
/// matching query per distinct span text.
pub fn collect_spans(raw: &[RawSpan], roster: &VariableRoster) -> Vec<CorpusSpan> {
    let queries: Vec<Query> = roster.variables.iter().flat_map(generate_queries).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for span in raw {
        if seen.contains(&span.text) {
            continue;
        }
        let hit = queries.iter().find(|q| {
            span.query.as_deref().is_none_or(|sq| sq.eq_ignore_ascii_case(&q.text)) && contains_all(&span.text, &q.terms())
        });
        match hit {
            Some(q) => {
                seen.insert(span.text.clone());
                out.push(to_span(span.span_id.as_deref(), &span.text, q));
            }
            None => log::debug!("span dropped: no query has all terms present"),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Category;

    fn variable(aliases: &[&str]) -> CandidateVariable {
        CandidateVariable {
            canonical_name: aliases[0].into(),
            category: Category::Attitudinal,
            aliases: aliases.iter().map(|s| s.to_string()).collect(),
            reference_convention: None,
        }
    }

    #[test]
    fn twelve_queries_for_three_aliases() {
        let q = generate_queries(&variable(&["trust in science", "faith in science", "confidence in science"]));
        assert_eq!(q.len(), 12);
        assert!(q.iter().any(|q| q.text == "trust in science and misinformation"));
        assert!(q.iter().any(|q| q.text == "disinformation and confidence in science"));
    }

    #[test]
    fn duplicate_aliases_collapse() {
        let q = generate_queries(&variable(&["age", "Age", "years"]));
        assert_eq!(q.len(), 8);
    }

    #[test]
    fn filter_requires_every_term() {
        let q = &generate_queries(&variable(&["health literacy"]))[0];
        let spans = [
            "Low Health Literacy predicts belief in MISINFORMATION.",
            "misinformation spreads quickly",
            "Low Health Literacy predicts belief in MISINFORMATION.",
        ];
        let kept = filter_spans(&spans, q);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].matched_alias, "health literacy");
        assert_eq!(kept[0].target, Target::Misinformation);
    }
}
