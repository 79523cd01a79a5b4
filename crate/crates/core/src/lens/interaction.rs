use std::cmp::Ordering;

use ndarray::{concatenate, Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use super::cv::{refit, select_hyper};
use super::enet::{FitConfig, GramProblem};
use super::folds::group_ids;
use super::standardize::Standardizer;
use super::{LensError, Result};
use crate::survey::DesignMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTerm {
    pub feature: String,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionReport {
    pub features: Vec<String>,
    pub main_effects: Vec<f64>,
    pub sim_indicator: f64,
    /// S×feature coefficients, aligned with `features`.
    pub interactions: Vec<f64>,
    pub lambda: f64,
    pub alpha: f64,
    pub top: Vec<RankedTerm>,
    pub n_human: usize,
    pub n_sim: usize,
}

impl InteractionReport {
    pub fn interaction(&self, feature: &str) -> Option<f64> {
        self.features.iter().position(|f| f == feature).map(|j| self.interactions[j])
    }

    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.top.iter().position(|t| t.feature == feature)
    }
}

/// Orders by |coefficient| descending, ties by name.
pub fn rank_terms(features: &[String], coefficients: &[f64], k: usize) -> Vec<RankedTerm> {
    let mut terms: Vec<RankedTerm> = features
        .iter()
        .zip(coefficients)
        .map(|(f, &c)| RankedTerm { feature: f.clone(), coefficient: c })
        .collect();
    terms.sort_by(|a, b| {
        b.coefficient
            .abs()
            .partial_cmp(&a.coefficient.abs())
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.feature.cmp(&b.feature))
    });
    terms.truncate(k);
    terms
}

/// Pooled human+simulated model with a centred simulation indicator S and
/// S×feature terms. Features are standardized on the pooled sample; inner
/// folds keep each respondent's human and simulated rows together.
pub fn pooled_interaction(
    x_human: &DesignMatrix,
    y_human: ArrayView1<f64>,
    x_sim: &DesignMatrix,
    y_sim: ArrayView1<f64>,
    cfg: &FitConfig,
    k: usize,
) -> Result<InteractionReport> {
    if !x_human.has_same_schema(x_sim) {
        return Err(LensError::Schema("human and simulated design matrices have different columns".into()));
    }
    for (x, y) in [(x_human, y_human), (x_sim, y_sim)] {
        if x.n_rows() != y.len() {
            return Err(LensError::LengthMismatch { rows: x.n_rows(), outcomes: y.len() });
        }
    }
    let (nh, ns) = (x_human.n_rows(), x_sim.n_rows());
    let n = nh + ns;
    let p = x_human.n_cols();
    let raw = concatenate(Axis(0), &[x_human.values.view(), x_sim.values.view()]).expect("same width");
    let z = Standardizer::fit(raw.view()).transform(raw.view());
    let s_mean = ns as f64 / n as f64;
    let s: Array1<f64> = (0..n).map(|i| if i < nh { -s_mean } else { 1.0 - s_mean }).collect();
    let mut extra = Array2::<f64>::zeros((n, p + 1));
    extra.column_mut(0).assign(&s);
    for j in 0..p {
        let col = &z.column(j) * &s;
        extra.column_mut(j + 1).assign(&col);
    }
    let extra = Standardizer::fit(extra.view()).transform(extra.view());
    let design = concatenate(Axis(1), &[z.view(), extra.view()]).expect("same height");
    let y: Array1<f64> = y_human.iter().chain(y_sim.iter()).copied().collect();

    let labels: Vec<&str> = x_human.row_ids.iter().chain(&x_sim.row_ids).map(String::as_str).collect();
    let (groups, _) = group_ids(&labels);
    let rows: Vec<usize> = (0..n).collect();
    let (sel, path) = select_hyper(design.view(), y.view(), &rows, &groups, cfg, cfg.seed)
        .ok_or_else(|| LensError::TooFewRows { needed: 2 * cfg.inner_folds, got: n })?;
    let fit = refit(&GramProblem::new(design.view(), y.view()), &path, sel.alpha, cfg);

    let features: Vec<String> = x_human.columns.iter().map(|c| c.name.clone()).collect();
    let interactions = fit.coefficients[p + 1..].to_vec();
    let top = rank_terms(&features, &interactions, k);
    Ok(InteractionReport {
        main_effects: fit.coefficients[..p].to_vec(),
        sim_indicator: fit.coefficients[p],
        interactions,
        features,
        lambda: sel.lambda,
        alpha: sel.alpha,
        top,
        n_human: nh,
        n_sim: ns,
    })
}
