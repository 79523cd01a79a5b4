//! The six analysis steps over one domain's human and simulated responses,
//! producing flat table rows.

use std::collections::BTreeMap;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::lens::{averaged_susceptibility, block_removal, cv_r2, pooled_interaction, FitConfig, LensError};
use crate::stats::{emd1d, jsd, spearman, StatError, UnitHistogram};
use crate::survey::{DesignMatrix, DomainConfig, DomainId, Outcome, PromptFormat, ResponseTable, Source};

pub const AVERAGED: &str = "All Outputs Averaged";
pub const GROUND_TRUTH: &str = "Ground Truth";

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Lens(#[from] LensError),
    #[error(transparent)]
    Stat(#[from] StatError),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// Everything the steps need for one domain.
#[derive(Debug, Clone)]
pub struct DomainInput {
    pub domain: DomainConfig,
    pub design: DesignMatrix,
    pub human: ResponseTable,
    pub simulated: ResponseTable,
}

/// One column of simulated scores: a single model, or every model of a
/// format averaged.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    pub format: PromptFormat,
    pub group: String,
    pub model: String,
    pub sources: Vec<Source>,
}

impl DomainInput {
    pub fn id(&self) -> DomainId {
        self.domain.id
    }

    pub fn respondents(&self) -> &[String] {
        &self.design.row_ids
    }

    pub fn human_scores(&self, outcome: Outcome) -> Vec<Option<f64>> {
        averaged_susceptibility(&self.human, self.respondents(), &self.domain.claims, outcome, &[Source::Human])
    }

    pub fn sim_scores(&self, outcome: Outcome, sources: &[Source]) -> Vec<Option<f64>> {
        averaged_susceptibility(&self.simulated, self.respondents(), &self.domain.claims, outcome, sources)
    }

    /// Formats present in the simulated table, in canonical order.
    pub fn formats(&self) -> Vec<PromptFormat> {
        let mut f: Vec<PromptFormat> = self.simulated.sources().iter().filter_map(Source::format).collect();
        f.dedup();
        f
    }

    pub fn format_sources(&self, format: PromptFormat) -> Vec<Source> {
        self.simulated.sources().into_iter().filter(|s| s.format() == Some(format)).collect()
    }

    /// Per-model series for a format followed by its averaged series.
    pub fn series(&self, format: PromptFormat) -> Vec<ScoreSeries> {
        let sources = self.format_sources(format);
        let mut out: Vec<ScoreSeries> = sources
            .iter()
            .map(|s| {
                let Source::Simulated { model, mode, .. } = s else { unreachable!("simulated table") };
                ScoreSeries { format, group: mode.group_name().into(), model: model.clone(), sources: vec![s.clone()] }
            })
            .collect();
        out.sort_by(|a, b| (group_rank(&a.group), &a.model).cmp(&(group_rank(&b.group), &b.model)));
        out.push(ScoreSeries { format, group: AVERAGED.into(), model: AVERAGED.into(), sources });
        out
    }
}

fn group_rank(g: &str) -> usize {
    ["Reasoning Models", "Chat Models (CoT)", "Chat Models (ZS)"].iter().position(|x| *x == g).unwrap_or(3)
}

fn paired(a: &[Option<f64>], b: &[Option<f64>]) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let mut rows = Vec::new();
    let (mut xa, mut xb) = (Vec::new(), Vec::new());
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        if let (Some(x), Some(y)) = (x, y) {
            rows.push(i);
            xa.push(*x);
            xb.push(*y);
        }
    }
    (rows, xa, xb)
}

fn rho_or_none(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 3 {
        return None;
    }
    spearman(x, y).ok()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRow {
    pub domain: String,
    pub outcome: String,
    pub format: String,
    pub group: String,
    pub model: String,
    pub n: usize,
    pub jsd: f64,
    pub emd: f64,
    pub rho: Option<f64>,
}

/// Step 1 (and the ρ column used by step 2): histogram JSD and EMD plus the
/// human–simulated rank correlation, per model and per format average.
pub fn divergence_table(input: &DomainInput, outcomes: &[Outcome], bins: usize) -> Result<Vec<DivergenceRow>> {
    let mut rows = Vec::new();
    for &outcome in outcomes {
        let human = input.human_scores(outcome);
        for format in input.formats() {
            for series in input.series(format) {
                let sim = input.sim_scores(outcome, &series.sources);
                let (_, h, s) = paired(&human, &sim);
                if h.is_empty() {
                    continue;
                }
                let (ph, ps) = (UnitHistogram::from_values(&h, bins)?, UnitHistogram::from_values(&s, bins)?);
                rows.push(DivergenceRow {
                    domain: input.id().as_str().into(),
                    outcome: outcome.as_str().into(),
                    format: format.as_str().into(),
                    group: series.group,
                    model: series.model,
                    n: h.len(),
                    jsd: jsd(&ph, &ps)?,
                    emd: emd1d(&ph, &ps)?,
                    rho: rho_or_none(&h, &s),
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRow {
    pub domain: String,
    pub outcome: String,
    pub format: String,
    pub n: usize,
    pub rho: Option<f64>,
}

/// Step 2: human vs format-averaged simulated susceptibility.
pub fn alignment_table(input: &DomainInput, outcomes: &[Outcome]) -> Vec<AlignmentRow> {
    let mut rows = Vec::new();
    for &outcome in outcomes {
        let human = input.human_scores(outcome);
        for format in input.formats() {
            let sim = input.sim_scores(outcome, &input.format_sources(format));
            let (_, h, s) = paired(&human, &sim);
            rows.push(AlignmentRow {
                domain: input.id().as_str().into(),
                outcome: outcome.as_str().into(),
                format: format.as_str().into(),
                n: h.len(),
                rho: rho_or_none(&h, &s),
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingRow {
    pub domain: String,
    pub source: String,
    pub format: String,
    pub n: usize,
    pub rho: Option<f64>,
}

/// Step 3: belief–sharing ρ for humans and each format average.
pub fn coupling_table(input: &DomainInput) -> Vec<CouplingRow> {
    let row = |source: &str, format: &str, b: Vec<Option<f64>>, s: Vec<Option<f64>>| {
        let (_, b, s) = paired(&b, &s);
        CouplingRow {
            domain: input.id().as_str().into(),
            source: source.into(),
            format: format.into(),
            n: b.len(),
            rho: rho_or_none(&b, &s),
        }
    };
    let mut rows = vec![row(
        GROUND_TRUTH,
        "",
        input.human_scores(Outcome::Belief),
        input.human_scores(Outcome::Sharing),
    )];
    for format in input.formats() {
        let src = input.format_sources(format);
        rows.push(row(
            format.display_name(),
            format.as_str(),
            input.sim_scores(Outcome::Belief, &src),
            input.sim_scores(Outcome::Sharing, &src),
        ));
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2Row {
    pub domain: String,
    pub outcome: String,
    pub source: String,
    pub format: String,
    pub n: usize,
    pub r2: Option<f64>,
    pub fold_r2: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRow {
    pub domain: String,
    pub outcome: String,
    pub source: String,
    pub format: String,
    pub block: String,
    pub removed_columns: usize,
    pub r2_full: Option<f64>,
    pub r2_removed: Option<f64>,
    pub retained_pct: Option<f64>,
}

fn fmt_folds(folds: &[Option<f64>]) -> String {
    folds.iter().map(|f| f.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"))).collect::<Vec<_>>().join(";")
}

/// Step 4: cross-validated R² and block removal for humans and each
/// format average.
pub fn predictive_tables(input: &DomainInput, outcomes: &[Outcome], cfg: &FitConfig) -> Result<(Vec<R2Row>, Vec<BlockRow>)> {
    let mut r2_rows = Vec::new();
    let mut block_rows = Vec::new();
    for &outcome in outcomes {
        let mut targets = vec![(GROUND_TRUTH.to_string(), String::new(), input.human_scores(outcome))];
        for format in input.formats() {
            let src = input.format_sources(format);
            targets.push((format.display_name().into(), format.as_str().into(), input.sim_scores(outcome, &src)));
        }
        for (source, format, scores) in targets {
            let rows: Vec<usize> = (0..scores.len()).filter(|&i| scores[i].is_some()).collect();
            let y: Array1<f64> = rows.iter().map(|&i| scores[i].expect("filtered")).collect();
            let x = input.design.select_rows(&rows);
            let report = block_removal(&x, y.view(), cfg)?;
            r2_rows.push(R2Row {
                domain: input.id().as_str().into(),
                outcome: outcome.as_str().into(),
                source: source.clone(),
                format: format.clone(),
                n: rows.len(),
                r2: report.r2_full,
                fold_r2: fmt_folds(&report.full.fold_r2),
            });
            for b in &report.blocks {
                block_rows.push(BlockRow {
                    domain: input.id().as_str().into(),
                    outcome: outcome.as_str().into(),
                    source: source.clone(),
                    format: format.clone(),
                    block: b.block.as_str().into(),
                    removed_columns: b.removed_columns,
                    r2_full: report.r2_full,
                    r2_removed: b.r2_removed,
                    retained_pct: b.retained_pct,
                });
            }
        }
    }
    Ok((r2_rows, block_rows))
}

/// Cross-validated R² of one score vector against the design.
pub fn score_r2(design: &DesignMatrix, scores: &[Option<f64>], cfg: &FitConfig) -> Result<Option<f64>> {
    let rows: Vec<usize> = (0..scores.len()).filter(|&i| scores[i].is_some()).collect();
    let y: Array1<f64> = rows.iter().map(|&i| scores[i].expect("filtered")).collect();
    let x = design.select_rows(&rows);
    Ok(cv_r2(x.values.view(), y.view(), cfg)?.mean_r2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRow {
    pub domain: String,
    pub outcome: String,
    pub format: String,
    pub rank: usize,
    pub feature: String,
    pub block: String,
    pub coefficient: f64,
    pub sim_indicator: f64,
    pub lambda: f64,
    pub alpha: f64,
}

/// Step 5: pooled human + format-averaged simulated model; top-`k`
/// simulation-by-feature terms.
pub fn interaction_table(input: &DomainInput, outcomes: &[Outcome], cfg: &FitConfig, k: usize) -> Result<Vec<InteractionRow>> {
    let blocks: BTreeMap<&str, &str> =
        input.design.columns.iter().map(|c| (c.name.as_str(), c.block.as_str())).collect();
    let mut rows = Vec::new();
    for &outcome in outcomes {
        let human = input.human_scores(outcome);
        for format in input.formats() {
            let sim = input.sim_scores(outcome, &input.format_sources(format));
            let (hr, hy): (Vec<usize>, Vec<f64>) = human.iter().enumerate().filter_map(|(i, v)| Some((i, (*v)?))).unzip();
            let (sr, sy): (Vec<usize>, Vec<f64>) = sim.iter().enumerate().filter_map(|(i, v)| Some((i, (*v)?))).unzip();
            let report = pooled_interaction(
                &input.design.select_rows(&hr),
                Array1::from(hy).view(),
                &input.design.select_rows(&sr),
                Array1::from(sy).view(),
                cfg,
                k,
            )?;
            for (rank, t) in report.top.iter().enumerate() {
                rows.push(InteractionRow {
                    domain: input.id().as_str().into(),
                    outcome: outcome.as_str().into(),
                    format: format.as_str().into(),
                    rank: rank + 1,
                    block: blocks.get(t.feature.as_str()).copied().unwrap_or("").into(),
                    feature: t.feature.clone(),
                    coefficient: t.coefficient,
                    sim_indicator: report.sim_indicator,
                    lambda: report.lambda,
                    alpha: report.alpha,
                });
            }
        }
    }
    Ok(rows)
}
