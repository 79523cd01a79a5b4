use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::prompts::extraction_prompt;
use super::variables::VariableRoster;
use super::{bounded_map, Result, TraceError};
use crate::gateway::{
    call_with_retries, first_json_object, ChatRequest, CompletionStatus, ModelSpec, ProviderSet, ReasoningChain,
    RetryPolicy, TaskHint,
};
use crate::stats::mean_pairwise_jaccard;
use crate::survey::{DomainId, Outcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionVote {
    pub chain_id: String,
    pub annotator_model: String,
    pub selected: BTreeSet<String>,
    pub rationale: String,
    /// Labels that matched no candidate variable.
    pub dropped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetainedSet {
    pub chain_id: String,
    pub domain: DomainId,
    pub outcome: Outcome,
    pub model: String,
    pub variables: BTreeSet<String>,
    pub vote_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainExtraction {
    pub chain_id: String,
    pub votes: Vec<ExtractionVote>,
    /// `None` when some annotator never produced a parsable answer.
    pub retained: Option<RetainedSet>,
    pub incomplete: Option<String>,
}

pub fn intersect_votes(votes: &[BTreeSet<String>]) -> BTreeSet<String> {
    let Some((first, rest)) = votes.split_first() else {
        return BTreeSet::new();
    };
    first.iter().filter(|v| rest.iter().all(|s| s.contains(*v))).cloned().collect()
}

/// `{"reasoning": ..., "label": [...]}`; a label given as a bracketed
/// string (Python-list style) is also accepted.
pub fn parse_extraction(text: &str) -> std::result::Result<(String, Vec<String>), String> {
    let obj = first_json_object(text).ok_or("no JSON object")?;
    let rationale = obj.get("reasoning").and_then(|v| v.as_str()).unwrap_or_default().to_string();
    let label = obj.get("label").ok_or("missing label")?;
    let list = match label {
        serde_json::Value::Array(items) => items.clone(),
        serde_json::Value::String(s) => {
            let fixed = s.replace('\'', "\"");
            match serde_json::from_str::<serde_json::Value>(&fixed) {
                Ok(serde_json::Value::Array(items)) => items,
                _ => return Err("label is not a list".into()),
            }
        }
        _ => return Err("label is not a list".into()),
    };
    let labels = list
        .iter()
        .map(|v| v.as_str().map(str::to_string).ok_or("non-string label"))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((rationale, labels))
}

fn check_annotators(annotators: &[ModelSpec]) -> Result<()> {
    if annotators.len() != 3 {
        return Err(TraceError::Annotators(annotators.len()));
    }
    Ok(())
}

/// One extraction vote per annotator; the retained set is their
/// intersection.
pub fn extract_variables(
    chain: &ReasoningChain,
    roster: &VariableRoster,
    annotators: &[ModelSpec],
    providers: &ProviderSet,
    policy: &RetryPolicy,
) -> Result<ChainExtraction> {
    check_annotators(annotators)?;
    if chain.text.trim().is_empty() {
        return Err(TraceError::EmptyChain(chain.chain_id.clone()));
    }
    let prompt = extraction_prompt(&chain.text, roster);
    let mut votes = Vec::new();
    let mut incomplete = None;
    for spec in annotators {
        let provider = providers.get(&spec.provider_id)?;
        let request = ChatRequest {
            model: spec.model_name.clone(),
            system: String::new(),
            user: prompt.clone(),
            temperature: spec.temperature,
            hint: TaskHint::Extraction {
                item_id: chain.chain_id.clone(),
                candidates: roster.names(),
                chain: chain.text.clone(),
            },
        };
        let out = call_with_retries(provider.as_ref(), &request, spec.max_retries, policy, parse_extraction);
        let Some((rationale, labels)) = out.value.filter(|_| out.status == CompletionStatus::Ok) else {
            incomplete = Some(format!("{}: {}", spec.label(), out.cause.unwrap_or_else(|| "no answer".into())));
            break;
        };
        let mut selected = BTreeSet::new();
        let mut dropped = Vec::new();
        for l in labels {
            match roster.resolve(&l) {
                Some(v) => {
                    selected.insert(v.canonical_name.clone());
                }
                None => dropped.push(l),
            }
        }
        if !dropped.is_empty() {
            log::info!("chain {} / {}: dropped out-of-list labels {dropped:?}", chain.chain_id, spec.label());
        }
        votes.push(ExtractionVote {
            chain_id: chain.chain_id.clone(),
            annotator_model: spec.label(),
            selected,
            rationale,
            dropped,
        });
    }
    let retained = incomplete.is_none().then(|| RetainedSet {
        chain_id: chain.chain_id.clone(),
        domain: chain.domain,
        outcome: chain.outcome,
        model: chain.model.clone(),
        variables: intersect_votes(&votes.iter().map(|v| v.selected.clone()).collect::<Vec<_>>()),
        vote_count: votes.len(),
    });
    if let Some(why) = &incomplete {
        log::warn!("chain {} incomplete: {why}", chain.chain_id);
    }
    Ok(ChainExtraction { chain_id: chain.chain_id.clone(), votes, retained, incomplete })
}

/// Mean over chains of the mean pairwise Jaccard among that chain's votes.
pub fn extraction_agreement(votes_by_chain: &[Vec<BTreeSet<String>>]) -> Option<f64> {
    let per_chain: Vec<f64> = votes_by_chain.iter().filter_map(|v| mean_pairwise_jaccard(v)).collect();
    (!per_chain.is_empty()).then(|| per_chain.iter().sum::<f64>() / per_chain.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRun {
    pub chains: Vec<ChainExtraction>,
    pub agreement: Option<f64>,
    pub mean_retained: Option<f64>,
    pub sd_retained: Option<f64>,
    pub incomplete: usize,
}

impl ExtractionRun {
    pub fn retained(&self) -> Vec<RetainedSet> {
        self.chains.iter().filter_map(|c| c.retained.clone()).collect()
    }
}

/// Annotates every chain with at most `concurrency` chains in flight.
pub fn extract_all(
    chains: &[ReasoningChain],
    roster: &VariableRoster,
    annotators: &[ModelSpec],
    providers: &ProviderSet,
    policy: &RetryPolicy,
    concurrency: usize,
) -> Result<ExtractionRun> {
    check_annotators(annotators)?;
    let usable: Vec<&ReasoningChain> = chains.iter().filter(|c| !c.text.trim().is_empty()).collect();
    let results = bounded_map(&usable, concurrency, |c| extract_variables(c, roster, annotators, providers, policy));
    let chains = results.into_iter().collect::<Result<Vec<_>>>()?;
    let complete: Vec<&ChainExtraction> = chains.iter().filter(|c| c.retained.is_some()).collect();
    let agreement =
        extraction_agreement(&complete.iter().map(|c| c.votes.iter().map(|v| v.selected.clone()).collect()).collect::<Vec<_>>());
    let sizes: Vec<f64> = complete.iter().map(|c| c.retained.as_ref().map_or(0, |r| r.variables.len()) as f64).collect();
    let (mean_retained, sd_retained) = mean_sd(&sizes);
    Ok(ExtractionRun { incomplete: chains.len() - complete.len(), chains, agreement, mean_retained, sd_retained })
}

pub(crate) fn mean_sd(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let sd = (xs.len() > 1).then(|| (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(m), sd)
}
