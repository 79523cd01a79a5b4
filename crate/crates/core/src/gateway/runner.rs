use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    complete, request_key, CacheRecord, CompletionStatus, GatewayError, ModelSpec, Provider, RequestKey,
    ResponseCache, Result, RetryPolicy,
};
use crate::prompt::{PromptBundle, PromptForge};
use crate::survey::{
    normalize_response, Dataset, DomainId, ModelMode, Outcome, PromptFormat, ResponseRecord, ResponseTable, Source,
};

/// Providers addressable by id.
#[derive(Clone, Default)]
pub struct ProviderSet {
    providers: BTreeMap<String, Arc<dyn Provider>>,
}

impl ProviderSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, provider: Arc<dyn Provider>) {
        self.providers.insert(provider.id().to_string(), provider);
    }

    pub fn with(mut self, provider: Arc<dyn Provider>) -> Self {
        self.insert(provider);
        self
    }

    pub fn get(&self, id: &str) -> Result<&Arc<dyn Provider>> {
        self.providers.get(id).ok_or_else(|| GatewayError::UnknownProvider(id.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub formats: Vec<PromptFormat>,
    pub outcomes: Vec<Outcome>,
    /// Maximum in-flight requests per provider.
    pub concurrency: usize,
    pub retry: RetryPolicy,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            formats: PromptFormat::ALL.to_vec(),
            outcomes: Outcome::ALL.to_vec(),
            concurrency: 4,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningChain {
    pub chain_id: String,
    pub request_key: RequestKey,
    pub model: String,
    pub mode: ModelMode,
    pub domain: DomainId,
    pub outcome: Outcome,
    pub text: String,
}

/// Terminal status counts for one (model, format) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub model: String,
    pub format: PromptFormat,
    pub total: usize,
    pub ok: usize,
    pub invalid: usize,
    pub failed: usize,
}

impl CellSummary {
    pub fn failure_share(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            (self.invalid + self.failed) as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub table: ResponseTable,
    pub reasoning: Vec<ReasoningChain>,
    pub cells: Vec<CellSummary>,
    pub warnings: Vec<String>,
    /// Requests sent to providers in this run (each possibly retried).
    pub executed: usize,
}

struct Job {
    key: RequestKey,
    spec: usize,
    bundle: PromptBundle,
    hash: String,
}

fn chain_id(key: &RequestKey) -> String {
    let d = Sha256::digest(key.to_string().as_bytes());
    hex::encode(&d[..8])
}

/// Runs the respondent × claim × outcome × model × format grid, reusing
/// terminal-ok cache entries whose prompt hash still matches.
pub fn run_simulation(
    dataset: &Dataset,
    forge: &PromptForge,
    models: &[ModelSpec],
    providers: &ProviderSet,
    config: &SimulationConfig,
    cache: &mut ResponseCache,
) -> Result<SimulationOutput> {
    for m in models {
        m.validate()?;
        providers.get(&m.provider_id)?;
    }
    let mut jobs = Vec::new();
    for (si, spec) in models.iter().enumerate() {
        for &format in &config.formats {
            for profile in &dataset.profiles {
                for claim in &dataset.domain.claims {
                    for &outcome in &config.outcomes {
                        let bundle = forge.assemble_prompt(profile, claim, outcome, format, spec.prompt_mode())?;
                        let hash = bundle.prompt_hash();
                        jobs.push(Job { key: request_key(&bundle, spec), spec: si, bundle, hash });
                    }
                }
            }
        }
    }
    jobs.sort_by(|a, b| a.key.cmp(&b.key));

    let mut by_provider: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, job) in jobs.iter().enumerate() {
        if cache.lookup_ok(&job.key, &job.hash).is_none() {
            by_provider.entry(models[job.spec].provider_id.as_str()).or_default().push(i);
        }
    }
    let executed: usize = by_provider.values().map(Vec::len).sum();
    log::info!("{} of {} grid requests need provider calls", executed, jobs.len());

    let workers = config.concurrency.max(1);
    let mut write_error = None;
    std::thread::scope(|s| {
        let (tx, rx) = mpsc::channel();
        for (pid, idxs) in &by_provider {
            let provider = providers.get(pid).expect("checked above").clone();
            let next = Arc::new(AtomicUsize::new(0));
            for _ in 0..workers.min(idxs.len()) {
                let (tx, next, provider, jobs) = (tx.clone(), next.clone(), provider.clone(), &jobs);
                s.spawn(move || loop {
                    let n = next.fetch_add(1, Ordering::SeqCst);
                    let Some(&i) = idxs.get(n) else { break };
                    let job = &jobs[i];
                    let result = complete(provider.as_ref(), &job.bundle, &models[job.spec], &config.retry);
                    if tx.send((i, result)).is_err() {
                        break;
                    }
                });
            }
        }
        drop(tx);
        for (i, result) in rx {
            if write_error.is_none() {
                if let Err(e) = cache.append(CacheRecord::new(result, jobs[i].hash.clone())) {
                    write_error = Some(e);
                }
            }
        }
    });
    if let Some(e) = write_error {
        return Err(e);
    }

    let mut records = Vec::new();
    let mut reasoning = Vec::new();
    let mut cells: BTreeMap<(String, PromptFormat), CellSummary> = BTreeMap::new();
    for job in &jobs {
        let spec = &models[job.spec];
        let cell = cells.entry((spec.label(), job.key.format)).or_insert_with(|| CellSummary {
            model: spec.label(),
            format: job.key.format,
            total: 0,
            ok: 0,
            invalid: 0,
            failed: 0,
        });
        cell.total += 1;
        let result = cache.get(&job.key).filter(|r| r.prompt_hash == job.hash).map(|r| &r.result);
        let Some(result) = result else {
            cell.failed += 1;
            continue;
        };
        match result.status {
            CompletionStatus::Ok => cell.ok += 1,
            CompletionStatus::Invalid => {
                cell.invalid += 1;
                continue;
            }
            CompletionStatus::Failed => {
                cell.failed += 1;
                continue;
            }
        }
        let raw = result.parsed_response.expect("ok results carry a response");
        let unit = normalize_response(raw, &job.bundle.scale)?;
        records.push(ResponseRecord {
            respondent_id: job.key.respondent_id.clone(),
            claim_id: job.key.claim_id.clone(),
            outcome: job.key.outcome,
            source: Source::simulated(spec.model_name.clone(), spec.mode, job.key.format),
            raw,
            unit,
        });
        if spec.mode.produces_reasoning() {
            if let Some(text) = result.reasoning_text.as_ref().filter(|t| !t.trim().is_empty()) {
                reasoning.push(ReasoningChain {
                    chain_id: chain_id(&job.key),
                    request_key: job.key.clone(),
                    model: spec.model_name.clone(),
                    mode: spec.mode,
                    domain: dataset.domain.id,
                    outcome: job.key.outcome,
                    text: text.clone(),
                });
            }
        }
    }
    let cells: Vec<CellSummary> = cells.into_values().collect();
    let warnings = cells
        .iter()
        .filter(|c| c.failure_share() >= 0.10)
        .map(|c| {
            format!(
                "analysis-blocking: {} / {} has {:.1}% failed or invalid responses",
                c.model,
                c.format,
                100.0 * c.failure_share()
            )
        })
        .collect();
    Ok(SimulationOutput { table: ResponseTable::new(records), reasoning, cells, warnings, executed })
}

pub fn write_reasoning_jsonl(chains: &[ReasoningChain], path: &Path) -> Result<()> {
    let io_err = |e| GatewayError::Io { path: path.display().to_string(), source: e };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    for c in chains {
        let line = serde_json::to_string(c).expect("chains serialize");
        writeln!(f, "{line}").map_err(io_err)?;
    }
    f.flush().map_err(io_err)
}
