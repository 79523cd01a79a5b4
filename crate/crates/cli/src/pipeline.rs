use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;
use simdiverge::analysis::{self, DomainInput};
use simdiverge::gateway::{
    run_simulation, Anthropic, MockProvider, ModelSpec, OpenAiCompatible, Provider, ProviderSet, ReasoningChain,
    ResponseCache, SimulationConfig,
};
use simdiverge::prompt::{PromptForge, PromptTemplate};
use simdiverge::survey::{build_design_matrix, load_dataset, Dataset, DomainConfig, PromptFormat, ResponseTable};
use simdiverge::synth::{gen_spans, PlantedSpec, SynthData};
use simdiverge::trace::{
    classify_all, collect_spans, direction_summary, extract_all, human_direction_kappa, human_extraction_agreement,
    read_human_direction, read_human_extraction, read_spans_jsonl, reasoning_frequency, VariableRoster,
};

use crate::artifacts::{sha256_hex, strip_comments, DatasetEntry, RunManifest, StepRecord, StepWriter};
use crate::config::{DomainSource, ProviderKind, RunConfig, SynthPreset};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Step {
    Simulate,
    Step1,
    Step2,
    Step3,
    Step4,
    Step5,
    Step6,
}

impl Step {
    pub const ALL: [Step; 7] =
        [Step::Simulate, Step::Step1, Step::Step2, Step::Step3, Step::Step4, Step::Step5, Step::Step6];

    pub fn as_str(self) -> &'static str {
        match self {
            Step::Simulate => "simulate",
            Step::Step1 => "step1",
            Step::Step2 => "step2",
            Step::Step3 => "step3",
            Step::Step4 => "step4",
            Step::Step5 => "step5",
            Step::Step6 => "step6",
        }
    }

    /// Comma-separated list; `all` expands to every step.
    pub fn parse_list(s: &str) -> Result<Vec<Step>> {
        let mut steps = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                steps.extend(Step::ALL);
            } else {
                steps.push(part.parse()?);
            }
        }
        steps.sort();
        steps.dedup();
        Ok(steps)
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Step {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Step::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown step {s:?} (expected simulate, step1..step6 or all)")))
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub models: Option<Vec<String>>,
    pub formats: Option<Vec<PromptFormat>>,
    pub mock: bool,
}

struct LoadedDomain {
    source: DomainSource,
    dataset: Dataset,
    forge: PromptForge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub domain: String,
    pub model: String,
    pub format: String,
    pub total: usize,
    pub ok: usize,
    pub invalid: usize,
    pub failed: usize,
    pub failure_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestRow {
    pub domain: String,
    pub respondents: usize,
    pub records: usize,
    pub columns: usize,
    pub zero_variance_columns: String,
    pub imputed_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteRow {
    pub chain_id: String,
    pub annotator: String,
    pub selected: String,
    pub dropped: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetainedRow {
    pub chain_id: String,
    pub domain: String,
    pub outcome: String,
    pub model: String,
    pub n: usize,
    pub variables: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub domain: String,
    pub rank: usize,
    pub variable: String,
    pub count: usize,
    pub chains: usize,
    pub top: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanRow {
    pub span_id: String,
    pub variable: String,
    pub alias: String,
    pub template: String,
    pub target: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRow {
    pub span_id: String,
    pub variable: String,
    pub target: String,
    pub label: String,
    pub votes: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    pub value: Option<f64>,
}

fn opt_seed(preset: &SynthPreset) -> &'static str {
    match preset {
        SynthPreset::PaperPattern => "paper_pattern",
        SynthPreset::TargetR2 => "target_r2",
        SynthPreset::AmplifiedTrust => "amplified_trust",
    }
}

pub fn planted_spec(d: &DomainSource) -> Option<PlantedSpec> {
    let s = d.synth.as_ref()?;
    Some(match s.preset {
        SynthPreset::PaperPattern => PlantedSpec::paper_pattern(d.id, s.n, s.seed),
        SynthPreset::TargetR2 => PlantedSpec::target_r2(d.id, s.n, s.seed, s.r2.unwrap_or(0.5)),
        SynthPreset::AmplifiedTrust => PlantedSpec::amplified_trust(d.id, s.n, s.seed),
    })
}

fn file_hash(path: &Path) -> Result<String> {
    crate::artifacts::file_sha256(path)
}

/// A configured run: datasets loaded, overrides applied, run id fixed.
pub struct Pipeline {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub run_id: String,
    mock: bool,
    domains: Vec<LoadedDomain>,
    roster: VariableRoster,
    datasets: BTreeMap<String, DatasetEntry>,
    inputs: BTreeMap<String, String>,
}

impl Pipeline {
    pub fn new(mut cfg: RunConfig, opts: &Options) -> Result<Self> {
        if let Some(out) = &opts.out {
            cfg.out = out.clone();
        }
        if let Some(seed) = opts.seed {
            cfg.seed = seed;
            cfg.lens.seed = seed;
        }
        if let Some(formats) = &opts.formats {
            cfg.formats = formats.clone();
        }
        if let Some(names) = &opts.models {
            for n in names {
                if !cfg.models.iter().any(|m| &m.model_name == n || &m.label() == n) {
                    return Err(Error::Config(format!("--models names unknown model {n:?}")));
                }
            }
            cfg.models.retain(|m| names.contains(&m.model_name) || names.contains(&m.label()));
        }
        cfg.validate()?;

        let mut inputs = BTreeMap::new();
        let mut domains = Vec::new();
        let mut datasets = BTreeMap::new();
        for d in &cfg.domains {
            let domain = match &d.config {
                Some(p) => {
                    inputs.insert(format!("{}.domain", d.id), file_hash(p)?);
                    DomainConfig::load(p)?
                }
                None => DomainConfig::builtin(d.id),
            };
            let template = match &d.template {
                Some(p) => {
                    inputs.insert(format!("{}.template", d.id), file_hash(p)?);
                    PromptTemplate::load(p)?
                }
                None => PromptTemplate::builtin(d.id),
            };
            let (dataset, source) = match planted_spec(d) {
                Some(spec) => {
                    let data = SynthData::generate(&spec)?;
                    let label = format!("synth:{}:n={}:seed={}", opt_seed(&d.synth.as_ref().expect("synth").preset), spec.n, spec.seed);
                    (data.dataset()?, label)
                }
                None => {
                    let (p, r) = (d.profiles.as_ref().expect("validated"), d.responses.as_ref().expect("validated"));
                    (load_dataset(p, r, &domain)?, "files".to_string())
                }
            };
            datasets.insert(
                d.id.as_str().to_string(),
                DatasetEntry {
                    respondents: dataset.profiles.len(),
                    records: dataset.responses.len(),
                    profiles_sha256: sha256_hex(dataset.profiles_jsonl().as_bytes()),
                    responses_sha256: sha256_hex(dataset.responses_csv().as_bytes()),
                    source,
                },
            );
            domains.push(LoadedDomain { source: d.clone(), forge: PromptForge::new(domain, template), dataset });
        }
        let roster = match &cfg.trace.variables {
            Some(p) => {
                inputs.insert("trace.variables".into(), file_hash(p)?);
                VariableRoster::load(p)?
            }
            None => VariableRoster::builtin(),
        };
        let t = &cfg.trace;
        for (name, p) in [("trace.spans", &t.spans), ("trace.human_extraction", &t.human_extraction), ("trace.human_direction", &t.human_direction)] {
            if let Some(p) = p {
                inputs.insert(name.into(), file_hash(p)?);
            }
        }

        let mut identity = serde_json::to_value(&cfg).expect("config serializes");
        strip_paths(&mut identity);
        let identity = json!({
            "config": identity,
            "mock": opts.mock,
            "datasets": datasets,
            "inputs": inputs,
            "version": env!("CARGO_PKG_VERSION"),
        });
        let run_id = sha256_hex(identity.to_string().as_bytes())[..16].to_string();
        let out = cfg.out.clone();
        Ok(Self { cfg, out, run_id, mock: opts.mock, domains, roster, datasets, inputs })
    }

    fn providers(&self) -> Result<ProviderSet> {
        let mut set = ProviderSet::new();
        for p in &self.cfg.providers {
            let provider: Arc<dyn Provider> = if self.mock || p.kind == ProviderKind::Mock {
                Arc::new(MockProvider::new(p.id.clone(), self.cfg.seed).with_failure_rate(p.failure_rate))
            } else {
                let key_env = p.key_env.clone().unwrap_or_else(|| format!("{}_API_KEY", p.id.to_uppercase()));
                match p.kind {
                    ProviderKind::Openai => Arc::new(OpenAiCompatible::new(
                        p.id.clone(),
                        p.base_url.clone().unwrap_or_else(|| "https://api.openai.com/v1".into()),
                        key_env,
                    )),
                    ProviderKind::Anthropic => Arc::new(Anthropic::new(
                        p.id.clone(),
                        p.base_url.clone().unwrap_or_else(|| "https://api.anthropic.com".into()),
                        key_env,
                    )),
                    ProviderKind::Mock => unreachable!("handled above"),
                }
            };
            set.insert(provider);
        }
        Ok(set)
    }

    fn fresh_manifest(&self) -> RunManifest {
        let config_json = serde_json::to_string(&{
            let mut v = serde_json::to_value(&self.cfg).expect("config serializes");
            strip_paths(&mut v);
            v
        })
        .expect("json");
        let mut settings = BTreeMap::new();
        settings.insert("bins".into(), self.cfg.bins.to_string());
        settings.insert("top_k".into(), self.cfg.top_k.to_string());
        settings.insert("formats".into(), self.cfg.formats.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(","));
        settings.insert("alphas".into(), format!("{:?}", self.cfg.lens.alphas));
        settings.insert("n_lambda".into(), self.cfg.lens.n_lambda.to_string());
        settings.insert("folds".into(), format!("{}x{}", self.cfg.lens.outer_folds, self.cfg.lens.inner_folds));
        settings.insert("missing_features".into(), "column-mean imputation".into());
        settings.insert("missing_outcomes".into(), "listwise exclusion".into());
        settings.insert("parse_failures".into(), "retry, then mark invalid".into());
        settings.insert("pooled_standardization".into(), "pooled moments".into());
        settings.insert("mock".into(), self.mock.to_string());
        let mut seeds = BTreeMap::new();
        seeds.insert("run".into(), self.cfg.seed);
        seeds.insert("lens".into(), self.cfg.lens.seed);
        for d in &self.domains {
            if let Some(s) = &d.source.synth {
                seeds.insert(format!("synth.{}", d.source.id), s.seed);
            }
        }
        RunManifest {
            run_id: self.run_id.clone(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_sha256: sha256_hex(config_json.as_bytes()),
            datasets: self.datasets.clone(),
            inputs: self.inputs.clone(),
            models: self.cfg.models.iter().map(ModelSpec::label).collect(),
            annotators: self.cfg.trace.annotators.iter().map(ModelSpec::label).collect(),
            seeds,
            settings,
            steps: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    /// Loads the manifest of a previous run with the same id, or starts a
    /// new one.
    pub fn manifest(&self) -> RunManifest {
        match RunManifest::load(&self.out) {
            Some(m) if m.run_id == self.run_id => m,
            Some(m) => {
                log::info!("previous run {} in {} has a different configuration; starting over", m.run_id, self.out.display());
                self.fresh_manifest()
            }
            None => self.fresh_manifest(),
        }
    }

    /// Runs `steps` in canonical order, reusing completed steps whose
    /// artifacts still verify.
    pub fn run(&self, steps: &[Step]) -> Result<RunManifest> {
        let mut manifest = self.manifest();
        let mut steps = steps.to_vec();
        steps.sort();
        steps.dedup();
        for step in steps {
            let name = step.as_str();
            if step != Step::Simulate {
                let upstream = manifest.verified(&self.out, Step::Simulate.as_str());
                if !matches!(upstream, Some(Ok(()))) {
                    return Err(Error::MissingUpstream { step: name.into() });
                }
            }
            match manifest.verified(&self.out, name) {
                Some(Ok(())) => {
                    log::info!("{name}: artifacts verified, reusing");
                    continue;
                }
                Some(Err(file)) => manifest.warn(format!("{name}: {file} changed on disk; recomputing")),
                None => {}
            }
            log::info!("{name}: running");
            let previous = manifest.steps.get(name).map(|r| r.artifacts.clone());
            let record = self.run_step(step, &mut manifest)?;
            if previous.is_some_and(|p| p != record.artifacts) && step == Step::Simulate {
                for s in &Step::ALL[1..] {
                    if manifest.steps.remove(s.as_str()).is_some() {
                        manifest.warn(format!("{s}: invalidated by new simulate artifacts"));
                    }
                }
                manifest.steps.remove("report");
            }
            manifest.steps.insert(name.into(), record);
            manifest.save(&self.out)?;
        }
        manifest.save(&self.out)?;
        Ok(manifest)
    }

    fn run_step(&self, step: Step, manifest: &mut RunManifest) -> Result<StepRecord> {
        let mut w = StepWriter::new(&self.out, &self.run_id);
        let mut notes = Vec::new();
        match step {
            Step::Simulate => self.simulate(&mut w, manifest)?,
            Step::Step1 => {
                let mut rows = Vec::new();
                for input in self.inputs()? {
                    rows.extend(analysis::divergence_table(&input, &self.cfg.outcomes, self.cfg.bins)?);
                }
                w.csv("step1/divergence.csv", &rows, &["domain", "outcome", "format", "group", "model", "n", "jsd", "emd", "rho"])?;
            }
            Step::Step2 => {
                let mut rows = Vec::new();
                for input in self.inputs()? {
                    rows.extend(analysis::alignment_table(&input, &self.cfg.outcomes));
                }
                w.csv("step2/alignment.csv", &rows, &["domain", "outcome", "format", "n", "rho"])?;
            }
            Step::Step3 => {
                let mut rows = Vec::new();
                for input in self.inputs()? {
                    rows.extend(analysis::coupling_table(&input));
                }
                w.csv("step3/coupling.csv", &rows, &["domain", "source", "format", "n", "rho"])?;
            }
            Step::Step4 => {
                let (mut r2, mut blocks) = (Vec::new(), Vec::new());
                for input in self.inputs()? {
                    let (a, b) = analysis::predictive_tables(&input, &self.cfg.outcomes, &self.cfg.lens)?;
                    r2.extend(a);
                    blocks.extend(b);
                }
                for r in &r2 {
                    if r.r2.is_some_and(|v| v <= 0.0) {
                        notes.push(format!("{} {} {}: R² ≤ 0, block ratios suppressed", r.domain, r.outcome, r.source));
                    }
                }
                w.csv("step4/r2.csv", &r2, &["domain", "outcome", "source", "format", "n", "r2", "fold_r2"])?;
                w.csv(
                    "step4/block_removal.csv",
                    &blocks,
                    &["domain", "outcome", "source", "format", "block", "removed_columns", "r2_full", "r2_removed", "retained_pct"],
                )?;
            }
            Step::Step5 => {
                let mut rows = Vec::new();
                for input in self.inputs()? {
                    rows.extend(analysis::interaction_table(&input, &self.cfg.outcomes, &self.cfg.lens, self.cfg.top_k)?);
                }
                w.csv(
                    "step5/interactions.csv",
                    &rows,
                    &["domain", "outcome", "format", "rank", "feature", "block", "coefficient", "sim_indicator", "lambda", "alpha"],
                )?;
            }
            Step::Step6 => notes = self.trace(&mut w)?,
        }
        let mut record = w.finish();
        record.notes = notes;
        Ok(record)
    }

    fn simulate(&self, w: &mut StepWriter, manifest: &mut RunManifest) -> Result<()> {
        if self.cfg.models.is_empty() {
            return Err(Error::Config("simulate needs at least one [[models]] entry".into()));
        }
        let providers = self.providers()?;
        let sim_cfg = SimulationConfig {
            formats: self.cfg.formats.clone(),
            outcomes: self.cfg.outcomes.clone(),
            concurrency: self.cfg.concurrency,
            retry: self.cfg.retry,
        };
        let mut cells = Vec::new();
        for d in &self.domains {
            let id = d.source.id.as_str();
            let mut cache = ResponseCache::open(&self.out.join(format!("cache/{id}.jsonl")))?;
            let output = run_simulation(&d.dataset, &d.forge, &self.cfg.models, &providers, &sim_cfg, &mut cache)?;
            log::info!("{id}: {} records, {} provider requests", output.table.len(), output.executed);
            for warning in &output.warnings {
                manifest.warn(format!("{id}: {warning}"));
            }
            let csv = format!("# run_id={}\n{}", self.run_id, output.table.to_csv_string());
            w.bytes(&format!("simulate/{id}_responses.csv"), csv.as_bytes())?;
            let mut jsonl = String::new();
            for chain in &output.reasoning {
                let mut v = serde_json::to_value(chain).expect("chain serializes");
                v["run_id"] = json!(self.run_id);
                jsonl.push_str(&v.to_string());
                jsonl.push('\n');
            }
            w.bytes(&format!("simulate/{id}_reasoning.jsonl"), jsonl.as_bytes())?;
            cells.extend(output.cells.iter().map(|c| CellRow {
                domain: id.into(),
                model: c.model.clone(),
                format: c.format.as_str().into(),
                total: c.total,
                ok: c.ok,
                invalid: c.invalid,
                failed: c.failed,
                failure_share: c.failure_share(),
            }));
        }
        w.csv("simulate/cells.csv", &cells, &["domain", "model", "format", "total", "ok", "invalid", "failed", "failure_share"])
    }

    fn simulated(&self, id: &str) -> Result<ResponseTable> {
        let path = self.out.join(format!("simulate/{id}_responses.csv"));
        let text = std::fs::read_to_string(&path).map_err(|e| Error::Io(path.clone(), e))?;
        Ok(ResponseTable::read_csv(strip_comments(&text).as_bytes())?)
    }

    fn chains(&self, id: &str) -> Result<Vec<ReasoningChain>> {
        let path = self.out.join(format!("simulate/{id}_reasoning.jsonl"));
        let text = std::fs::read_to_string(&path).map_err(|e| Error::Io(path.clone(), e))?;
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), i + 1)))
            })
            .collect()
    }

    fn inputs(&self) -> Result<Vec<DomainInput>> {
        self.domains
            .iter()
            .map(|d| {
                Ok(DomainInput {
                    design: build_design_matrix(&d.dataset.profiles, &d.dataset.domain)?,
                    domain: d.dataset.domain.clone(),
                    human: d.dataset.responses.clone(),
                    simulated: self.simulated(d.source.id.as_str())?,
                })
            })
            .collect()
    }

    fn trace(&self, w: &mut StepWriter) -> Result<Vec<String>> {
        let t = &self.cfg.trace;
        if t.annotators.len() != 3 {
            return Err(Error::Config("step6 needs exactly three [[trace.annotators]] entries".into()));
        }
        let providers = self.providers()?;
        let mut notes = Vec::new();
        let mut chains = Vec::new();
        for d in &self.domains {
            chains.extend(self.chains(d.source.id.as_str())?);
        }
        let policy = self.cfg.retry;
        let extraction = extract_all(&chains, &self.roster, &t.annotators, &providers, &policy, self.cfg.concurrency)?;
        let mut votes = Vec::new();
        for c in &extraction.chains {
            for v in &c.votes {
                votes.push(VoteRow {
                    chain_id: v.chain_id.clone(),
                    annotator: v.annotator_model.clone(),
                    selected: v.selected.iter().cloned().collect::<Vec<_>>().join(";"),
                    dropped: v.dropped.join(";"),
                });
            }
            if let Some(why) = &c.incomplete {
                notes.push(format!("chain {} incomplete: {why}", c.chain_id));
            }
        }
        let retained = extraction.retained();
        let retained_rows: Vec<RetainedRow> = retained
            .iter()
            .map(|r| RetainedRow {
                chain_id: r.chain_id.clone(),
                domain: r.domain.as_str().into(),
                outcome: r.outcome.as_str().into(),
                model: r.model.clone(),
                n: r.variables.len(),
                variables: r.variables.iter().cloned().collect::<Vec<_>>().join(";"),
            })
            .collect();
        let mut freq = Vec::new();
        for f in reasoning_frequency(&retained, &self.roster, t.top_k) {
            for (i, c) in f.counts.iter().enumerate() {
                freq.push(FrequencyRow {
                    domain: f.domain.as_str().into(),
                    rank: i + 1,
                    variable: c.variable.clone(),
                    count: c.count,
                    chains: f.chains,
                    top: i < f.top.len(),
                });
            }
        }

        let raw = match &t.spans {
            Some(p) => read_spans_jsonl(p)?,
            None => gen_spans(&self.roster, t.synth_spans_per_variable, self.cfg.seed),
        };
        let spans = collect_spans(&raw, &self.roster);
        let direction = classify_all(&spans, &self.roster, &t.annotators, &providers, &policy, self.cfg.concurrency)?;
        for s in &direction.spans {
            if let Some(why) = &s.excluded {
                notes.push(format!("span {} excluded: {why}", s.span_id));
            }
        }
        let labels = direction.labels();
        let summary = direction_summary(&labels, t.min_support);

        let mut metrics = vec![
            MetricRow { metric: "chains".into(), value: Some(extraction.chains.len() as f64) },
            MetricRow { metric: "incomplete_chains".into(), value: Some(extraction.incomplete as f64) },
            MetricRow { metric: "extraction_jaccard".into(), value: extraction.agreement },
            MetricRow { metric: "retained_mean".into(), value: extraction.mean_retained },
            MetricRow { metric: "retained_sd".into(), value: extraction.sd_retained },
            MetricRow { metric: "unique_spans".into(), value: Some(spans.len() as f64) },
            MetricRow { metric: "labelled_spans".into(), value: Some(labels.len() as f64) },
            MetricRow { metric: "direction_kappa".into(), value: direction.kappa },
        ];
        if let Some(p) = &t.human_extraction {
            let rows = read_human_extraction(p)?;
            metrics.push(MetricRow {
                metric: "human_extraction_jaccard".into(),
                value: human_extraction_agreement(&retained, &rows, &self.roster),
            });
        }
        if let Some(p) = &t.human_direction {
            let rows = read_human_direction(p)?;
            metrics.push(MetricRow { metric: "human_direction_kappa".into(), value: human_direction_kappa(&labels, &rows).ok() });
        }

        w.csv("step6/extraction_votes.csv", &votes, &["chain_id", "annotator", "selected", "dropped"])?;
        w.csv("step6/retained.csv", &retained_rows, &["chain_id", "domain", "outcome", "model", "n", "variables"])?;
        w.csv("step6/frequency.csv", &freq, &["domain", "rank", "variable", "count", "chains", "top"])?;
        let span_rows: Vec<SpanRow> = spans
            .iter()
            .map(|s| SpanRow {
                span_id: s.span_id.clone(),
                variable: s.matched_variable.clone(),
                alias: s.matched_alias.clone(),
                template: s.matched_template.clone(),
                target: s.target.as_str().into(),
                text: s.text.clone(),
            })
            .collect();
        w.csv("step6/spans.csv", &span_rows, &["span_id", "variable", "alias", "template", "target", "text"])?;
        let label_rows: Vec<LabelRow> = labels
            .iter()
            .map(|l| LabelRow {
                span_id: l.span_id.clone(),
                variable: l.variable.clone(),
                target: l.target.as_str().into(),
                label: l.label.as_str().into(),
                votes: l.votes.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(";"),
            })
            .collect();
        w.csv("step6/labels.csv", &label_rows, &["span_id", "variable", "target", "label", "votes"])?;
        w.csv("step6/direction.csv", &summary, &["variable", "n", "negative", "neutral", "positive"])?;
        w.csv("step6/agreement.csv", &metrics, &["metric", "value"])?;
        Ok(notes)
    }

    /// Writes validated copies of every dataset plus a summary table.
    pub fn ingest(&self) -> Result<RunManifest> {
        let mut manifest = self.manifest();
        let mut w = StepWriter::new(&self.out, &self.run_id);
        let mut rows = Vec::new();
        for d in &self.domains {
            let id = d.source.id.as_str();
            let design = build_design_matrix(&d.dataset.profiles, &d.dataset.domain)?;
            w.bytes(&format!("data/{id}/profiles.jsonl"), d.dataset.profiles_jsonl().as_bytes())?;
            w.bytes(&format!("data/{id}/responses.csv"), d.dataset.responses_csv().as_bytes())?;
            rows.push(IngestRow {
                domain: id.into(),
                respondents: d.dataset.profiles.len(),
                records: d.dataset.responses.len(),
                columns: design.n_cols(),
                zero_variance_columns: design
                    .columns
                    .iter()
                    .filter(|c| c.zero_variance)
                    .map(|c| c.name.clone())
                    .collect::<Vec<_>>()
                    .join(";"),
                imputed_cells: design.columns.iter().map(|c| c.imputed).sum(),
            });
        }
        w.csv("data/ingest.csv", &rows, &["domain", "respondents", "records", "columns", "zero_variance_columns", "imputed_cells"])?;
        manifest.steps.insert("ingest".into(), w.finish());
        manifest.save(&self.out)?;
        Ok(manifest)
    }
}

/// Blanks filesystem locations so the run id depends on content only.
fn strip_paths(v: &mut serde_json::Value) {
    if let Some(obj) = v.as_object_mut() {
        obj.remove("out");
        for d in obj.get_mut("domains").and_then(|d| d.as_array_mut()).into_iter().flatten() {
            for k in ["profiles", "responses", "config", "template"] {
                if let Some(x) = d.get_mut(k).filter(|x| !x.is_null()) {
                    *x = json!("<input>");
                }
            }
        }
        if let Some(t) = obj.get_mut("trace").and_then(|t| t.as_object_mut()) {
            for k in ["variables", "spans", "human_extraction", "human_direction"] {
                if let Some(x) = t.get_mut(k).filter(|x| !x.is_null()) {
                    *x = json!("<input>");
                }
            }
        }
    }
}
