//! Agreement between model annotations and human-coded labels.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Deserialize;

use super::direction::{Direction, DirectionLabel};
use super::extract::RetainedSet;
use super::variables::VariableRoster;
use super::{Result, TraceError};
use crate::stats::{fleiss_kappa, mean_pairwise_jaccard, AgreementMatrix, StatError};

/// `chain_id,rater,variables` with variables `;`-separated.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct HumanExtractionRow {
    pub chain_id: String,
    pub rater: String,
    #[serde(default)]
    pub variables: String,
}

/// `span_id,rater,label`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct HumanDirectionRow {
    pub span_id: String,
    pub rater: String,
    pub label: String,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| TraceError::Csv(e.to_string()))?;
    r.deserialize().map(|row| row.map_err(|e| TraceError::Csv(e.to_string()))).collect()
}

pub fn read_human_extraction(path: &Path) -> Result<Vec<HumanExtractionRow>> {
    read_rows(path)
}

pub fn read_human_direction(path: &Path) -> Result<Vec<HumanDirectionRow>> {
    read_rows(path)
}

/// Mean over chains of the pairwise Jaccard among {model, raters...}.
pub fn human_extraction_agreement(
    retained: &[RetainedSet],
    rows: &[HumanExtractionRow],
    roster: &VariableRoster,
) -> Option<f64> {
    let mut human: BTreeMap<&str, Vec<BTreeSet<String>>> = BTreeMap::new();
    for row in rows {
        let set = row
            .variables
            .split(';')
            .filter(|s| !s.trim().is_empty())
            .filter_map(|s| roster.resolve(s).map(|v| v.canonical_name.clone()))
            .collect();
        human.entry(row.chain_id.as_str()).or_default().push(set);
    }
    let scores: Vec<f64> = retained
        .iter()
        .filter_map(|r| {
            let mut sets = vec![r.variables.clone()];
            sets.extend(human.get(r.chain_id.as_str())?.iter().cloned());
            mean_pairwise_jaccard(&sets)
        })
        .collect();
    (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Fleiss' κ over {model consensus, raters...} for spans that every rater
/// labelled.
pub fn human_direction_kappa(labels: &[DirectionLabel], rows: &[HumanDirectionRow]) -> std::result::Result<f64, StatError> {
    let mut human: BTreeMap<&str, Vec<Direction>> = BTreeMap::new();
    for row in rows {
        let d = row.label.parse().map_err(|_| StatError::InvalidMatrix(format!("unknown label {:?}", row.label)))?;
        human.entry(row.span_id.as_str()).or_default().push(d);
    }
    let raters = human.values().map(Vec::len).max().unwrap_or(0);
    let items: Vec<Vec<Direction>> = labels
        .iter()
        .filter_map(|l| {
            let h = human.get(l.span_id.as_str()).filter(|h| h.len() == raters)?;
            let mut v = vec![l.label];
            v.extend(h);
            Some(v)
        })
        .collect();
    fleiss_kappa(&AgreementMatrix::from_labels(&items, &Direction::ALL)?)
}
