use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::domain::{ClaimItem, DomainConfig, Outcome};
use super::scale::normalize_response;
use super::{Result, SurveyError};

/// How the profile is laid out in the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptFormat {
    Original,
    AltOrder,
    Composite,
}

impl PromptFormat {
    pub const ALL: [PromptFormat; 3] = [PromptFormat::Original, PromptFormat::AltOrder, PromptFormat::Composite];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptFormat::Original => "original",
            PromptFormat::AltOrder => "alt_order",
            PromptFormat::Composite => "composite",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            PromptFormat::Original => "Original Format",
            PromptFormat::AltOrder => "Alternative Ordering",
            PromptFormat::Composite => "Composite Score Format",
        }
    }
}

impl fmt::Display for PromptFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptFormat {
    type Err = SurveyError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "original" => Ok(PromptFormat::Original),
            "alt_order" => Ok(PromptFormat::AltOrder),
            "composite" => Ok(PromptFormat::Composite),
            other => Err(SurveyError::Schema(format!("unknown prompt format {other:?}"))),
        }
    }
}

/// Response-generation mode of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelMode {
    Reasoning,
    ChatCot,
    ChatZs,
}

impl ModelMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelMode::Reasoning => "reasoning",
            ModelMode::ChatCot => "chat_cot",
            ModelMode::ChatZs => "chat_zs",
        }
    }

    pub fn group_name(self) -> &'static str {
        match self {
            ModelMode::Reasoning => "Reasoning Models",
            ModelMode::ChatCot => "Chat Models (CoT)",
            ModelMode::ChatZs => "Chat Models (ZS)",
        }
    }

    /// Whether the bundle asks for an explicit reasoning field.
    pub fn expects_reasoning_field(self) -> bool {
        matches!(self, ModelMode::ChatCot)
    }

    /// Whether this mode yields a reasoning chain worth storing.
    pub fn produces_reasoning(self) -> bool {
        matches!(self, ModelMode::ChatCot | ModelMode::Reasoning)
    }
}

impl fmt::Display for ModelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelMode {
    type Err = SurveyError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "reasoning" => Ok(ModelMode::Reasoning),
            "chat_cot" => Ok(ModelMode::ChatCot),
            "chat_zs" => Ok(ModelMode::ChatZs),
            other => Err(SurveyError::Schema(format!("unknown model mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    Human,
    Simulated { model: String, mode: ModelMode, format: PromptFormat },
}

impl Source {
    pub fn simulated(model: impl Into<String>, mode: ModelMode, format: PromptFormat) -> Self {
        Source::Simulated { model: model.into(), mode, format }
    }

    pub fn format(&self) -> Option<PromptFormat> {
        match self {
            Source::Human => None,
            Source::Simulated { format, .. } => Some(*format),
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Human => f.write_str("human"),
            Source::Simulated { model, mode, format } => write!(f, "{model}|{mode}|{format}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub respondent_id: String,
    pub claim_id: String,
    pub outcome: Outcome,
    pub source: Source,
    pub raw: i64,
    pub unit: f64,
}

impl ResponseRecord {
    pub fn new(
        respondent_id: impl Into<String>,
        claim: &ClaimItem,
        outcome: Outcome,
        source: Source,
        raw: i64,
        domain: &DomainConfig,
    ) -> Result<Self> {
        let unit = normalize_response(raw, domain.scale(outcome))?;
        Ok(Self {
            respondent_id: respondent_id.into(),
            claim_id: claim.id.clone(),
            outcome,
            source,
            raw,
            unit,
        })
    }

    fn sort_key(&self) -> (&Source, &str, &str, Outcome) {
        (&self.source, &self.respondent_id, &self.claim_id, self.outcome)
    }
}

/// Per-respondent susceptibility: the mean unit response over the domain's
/// claims, or `None` when any claim response is missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilityScore {
    pub respondent_id: String,
    pub outcome: Outcome,
    pub source: Source,
    pub value: Option<f64>,
}

/// Mean of the unit values for one (respondent, outcome, source), provided
/// every claim is covered.
pub fn respondent_susceptibility(records: &[&ResponseRecord], claims: &[ClaimItem]) -> Option<f64> {
    let mut by_claim: BTreeMap<&str, f64> = BTreeMap::new();
    for r in records {
        by_claim.insert(r.claim_id.as_str(), r.unit);
    }
    let mut total = 0.0;
    for c in claims {
        total += by_claim.get(c.id.as_str())?;
    }
    Some((total / claims.len() as f64).clamp(0.0, 1.0))
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    respondent_id: String,
    claim_id: String,
    outcome: Outcome,
    source: String,
    model: String,
    mode: String,
    format: String,
    raw: i64,
    unit: f64,
}

/// Canonically ordered collection of response records.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResponseTable {
    records: Vec<ResponseRecord>,
}

impl ResponseTable {
    pub fn new(mut records: Vec<ResponseRecord>) -> Self {
        records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        Self { records }
    }

    pub fn records(&self) -> &[ResponseRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn merge(mut self, other: ResponseTable) -> Self {
        self.records.extend(other.records);
        Self::new(self.records)
    }

    pub fn sources(&self) -> BTreeSet<Source> {
        self.records.iter().map(|r| r.source.clone()).collect()
    }

    pub fn filter_source(&self, source: &Source) -> ResponseTable {
        ResponseTable {
            records: self.records.iter().filter(|r| &r.source == source).cloned().collect(),
        }
    }

    /// Susceptibility for every respondent id in `respondents` (in order).
    pub fn susceptibility(
        &self,
        respondents: &[String],
        claims: &[ClaimItem],
        outcome: Outcome,
        source: &Source,
    ) -> Vec<SusceptibilityScore> {
        let mut grouped: BTreeMap<&str, Vec<&ResponseRecord>> = BTreeMap::new();
        for r in &self.records {
            if r.outcome == outcome && &r.source == source {
                grouped.entry(r.respondent_id.as_str()).or_default().push(r);
            }
        }
        respondents
            .iter()
            .map(|id| SusceptibilityScore {
                respondent_id: id.clone(),
                outcome,
                source: source.clone(),
                value: grouped
                    .get(id.as_str())
                    .and_then(|recs| respondent_susceptibility(recs, claims)),
            })
            .collect()
    }

    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            let (source, model, mode, format) = match &r.source {
                Source::Human => ("human", String::new(), String::new(), String::new()),
                Source::Simulated { model, mode, format } => {
                    ("simulated", model.clone(), mode.to_string(), format.to_string())
                }
            };
            w.serialize(CsvRow {
                respondent_id: r.respondent_id.clone(),
                claim_id: r.claim_id.clone(),
                outcome: r.outcome,
                source: source.into(),
                model,
                mode,
                format,
                raw: r.raw,
                unit: r.unit,
            })
            .map_err(|e| SurveyError::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| SurveyError::Csv(e.to_string()))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| SurveyError::io(path, e))?;
        self.write_csv(io::BufWriter::new(file))
    }

    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self> {
        Self::read_csv_inner(reader).map_err(|e| e.in_file("responses"))
    }

    fn read_csv_inner<R: io::Read>(reader: R) -> Result<Self> {
        let mut records = Vec::new();
        for (line, row) in super::read_csv_rows::<CsvRow, _>(reader)? {
            let source = match row.source.as_str() {
                "human" => Source::Human,
                "simulated" => Source::Simulated {
                    model: row.model,
                    mode: row.mode.parse()?,
                    format: row.format.parse()?,
                },
                other => {
                    return Err(SurveyError::Malformed {
                        file: String::new(),
                        line,
                        message: format!("unknown source {other:?}"),
                    })
                }
            };
            records.push(ResponseRecord {
                respondent_id: row.respondent_id,
                claim_id: row.claim_id,
                outcome: row.outcome,
                source,
                raw: row.raw,
                unit: row.unit,
            });
        }
        Ok(Self::new(records))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| SurveyError::io(path, e))?;
        Self::read_csv_inner(io::BufReader::new(file)).map_err(|e| e.in_file(&path.display().to_string()))
    }
}
