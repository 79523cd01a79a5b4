use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::prompts::direction_prompt;
use super::spans::{CorpusSpan, Target};
use super::variables::VariableRoster;
use super::{bounded_map, Result, TraceError};
use crate::gateway::{call_with_retries, first_json_object, ChatRequest, CompletionStatus, ModelSpec, ProviderSet, RetryPolicy, TaskHint};
use crate::stats::{fleiss_kappa, AgreementMatrix, StatError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    Positive,
    Neutral,
    Negative,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Positive, Direction::Neutral, Direction::Negative];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Positive => "Positive",
            Direction::Neutral => "Neutral",
            Direction::Negative => "Negative",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Direction::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown direction {s:?}"))
    }
}

/// Positive or Negative only when every vote agrees; otherwise Neutral.
pub fn aggregate_direction(votes: &[Direction]) -> Direction {
    match votes.first() {
        Some(&d) if votes.iter().all(|v| *v == d) => d,
        _ => Direction::Neutral,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionLabel {
    pub span_id: String,
    pub variable: String,
    pub target: Target,
    pub label: Direction,
    pub votes: Vec<Direction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanDirection {
    pub span_id: String,
    pub label: Option<DirectionLabel>,
    pub excluded: Option<String>,
}

pub fn parse_direction(text: &str) -> std::result::Result<Direction, String> {
    let obj = first_json_object(text).ok_or("no JSON object")?;
    obj.get("label").and_then(|v| v.as_str()).ok_or("missing label")?.parse()
}

pub fn classify_direction(
    span: &CorpusSpan,
    roster: &VariableRoster,
    annotators: &[ModelSpec],
    providers: &ProviderSet,
    policy: &RetryPolicy,
) -> Result<SpanDirection> {
    if annotators.len() != 3 {
        return Err(TraceError::Annotators(annotators.len()));
    }
    let prompt = direction_prompt(&span.text, &span.matched_variable, span.target, roster);
    let mut votes = Vec::new();
    for spec in annotators {
        let provider = providers.get(&spec.provider_id)?;
        let request = ChatRequest {
            model: spec.model_name.clone(),
            system: String::new(),
            user: prompt.clone(),
            temperature: spec.temperature,
            hint: TaskHint::Direction {
                item_id: span.span_id.clone(),
                variable: span.matched_variable.clone(),
                target: span.target.as_str().into(),
                span: span.text.clone(),
            },
        };
        let out = call_with_retries(provider.as_ref(), &request, spec.max_retries, policy, parse_direction);
        match out.value.filter(|_| out.status == CompletionStatus::Ok) {
            Some(d) => votes.push(d),
            None => {
                let reason = format!("{}: {}", spec.label(), out.cause.unwrap_or_else(|| "no answer".into()));
                log::warn!("span {} excluded: {reason}", span.span_id);
                return Ok(SpanDirection { span_id: span.span_id.clone(), label: None, excluded: Some(reason) });
            }
        }
    }
    Ok(SpanDirection {
        span_id: span.span_id.clone(),
        label: Some(DirectionLabel {
            span_id: span.span_id.clone(),
            variable: span.matched_variable.clone(),
            target: span.target,
            label: aggregate_direction(&votes),
            votes,
        }),
        excluded: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionRun {
    pub spans: Vec<SpanDirection>,
    /// Fleiss' κ across the three annotators over labelled spans.
    pub kappa: Option<f64>,
}

impl DirectionRun {
    pub fn labels(&self) -> Vec<DirectionLabel> {
        self.spans.iter().filter_map(|s| s.label.clone()).collect()
    }
}

pub fn classify_all(
    spans: &[CorpusSpan],
    roster: &VariableRoster,
    annotators: &[ModelSpec],
    providers: &ProviderSet,
    policy: &RetryPolicy,
    concurrency: usize,
) -> Result<DirectionRun> {
    let results = bounded_map(spans, concurrency, |s| classify_direction(s, roster, annotators, providers, policy));
    let spans = results.into_iter().collect::<Result<Vec<_>>>()?;
    let labels: Vec<DirectionLabel> = spans.iter().filter_map(|s| s.label.clone()).collect();
    let kappa = annotator_kappa(&labels).ok();
    Ok(DirectionRun { spans, kappa })
}

pub fn annotator_kappa(labels: &[DirectionLabel]) -> std::result::Result<f64, StatError> {
    let items: Vec<Vec<Direction>> = labels.iter().map(|l| l.votes.clone()).collect();
    fleiss_kappa(&AgreementMatrix::from_labels(&items, &Direction::ALL)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSummary {
    pub variable: String,
    pub n: usize,
    pub negative: f64,
    pub neutral: f64,
    pub positive: f64,
}

/// Label proportions per variable; variables with fewer than
/// `min_support` spans are left out.
pub fn direction_summary(labels: &[DirectionLabel], min_support: usize) -> Vec<DirectionSummary> {
    let mut by_var: BTreeMap<&str, [usize; 3]> = BTreeMap::new();
    for l in labels {
        let c = by_var.entry(l.variable.as_str()).or_default();
        match l.label {
            Direction::Negative => c[0] += 1,
            Direction::Neutral => c[1] += 1,
            Direction::Positive => c[2] += 1,
        }
    }
    by_var
        .into_iter()
        .filter_map(|(v, c)| {
            let n: usize = c.iter().sum();
            (n >= min_support.max(1)).then(|| DirectionSummary {
                variable: v.to_string(),
                n,
                negative: c[0] as f64 / n as f64,
                neutral: c[1] as f64 / n as f64,
                positive: c[2] as f64 / n as f64,
            })
        })
        .collect()
}

/// `labels.csv`: span_id, variable, target, label, votes (`;`-joined).
pub fn write_labels_csv(labels: &[DirectionLabel], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| TraceError::Csv(e.to_string()))?;
    w.write_record(["span_id", "variable", "target", "label", "votes"]).map_err(|e| TraceError::Csv(e.to_string()))?;
    for l in labels {
        let votes: Vec<&str> = l.votes.iter().map(|d| d.as_str()).collect();
        w.write_record([l.span_id.as_str(), &l.variable, l.target.as_str(), l.label.as_str(), &votes.join(";")])
            .map_err(|e| TraceError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| TraceError::Io(path.display().to_string(), e))
}
