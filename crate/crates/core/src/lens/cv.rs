use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::enet::{predict, FitConfig, FitResult, GramProblem};
use super::folds::{dense_groups, derive_seed, grouped_folds};
use super::standardize::Standardizer;
use super::{LensError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub lambda: f64,
    pub alpha: f64,
    /// Mean inner validation R² at the chosen point.
    pub inner_r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    /// `None` for folds skipped because the held-out outcome is constant.
    pub fold_r2: Vec<Option<f64>>,
    pub mean_r2: Option<f64>,
    pub selected: Vec<Option<Selection>>,
    pub seed: u64,
    pub notes: Vec<String>,
}

pub(crate) fn r2_score(y: ArrayView1<f64>, pred: ArrayView1<f64>) -> Option<f64> {
    let mean = y.mean()?;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if sst <= 1e-14 {
        return None;
    }
    let sse: f64 = y.iter().zip(pred.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    Some(1.0 - sse / sst)
}

/// Standardizes on the training rows, fits, and predicts the test rows.
struct SplitProblem {
    scaler: Standardizer,
    problem: GramProblem,
}

impl SplitProblem {
    fn new(x: ArrayView2<f64>, y: ArrayView1<f64>, train: &[usize]) -> Self {
        let xt = x.select(Axis(0), train);
        let yt: Array1<f64> = train.iter().map(|&i| y[i]).collect();
        let scaler = Standardizer::fit(xt.view());
        let problem = GramProblem::new(scaler.transform(xt.view()).view(), yt.view());
        Self { scaler, problem }
    }

    fn predict(&self, x: ArrayView2<f64>, rows: &[usize], fit: &FitResult) -> Array1<f64> {
        let xs = self.scaler.transform(x.select(Axis(0), rows).view());
        predict(xs.view(), fit)
    }
}

fn split(folds: &[usize], f: usize) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, &k) in folds.iter().enumerate() {
        if k == f {
            test.push(i)
        } else {
            train.push(i)
        }
    }
    (train, test)
}

/// Picks (λ, α) on `rows` by inner k-fold mean validation R². The λ grid for
/// each α comes from the full `rows` sample; ties keep the earlier point
/// (larger λ, then the earlier α).
pub(crate) fn select_hyper(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    rows: &[usize],
    groups: &[usize],
    cfg: &FitConfig,
    seed: u64,
) -> Option<(Selection, Vec<f64>)> {
    let full = SplitProblem::new(x, y, rows);
    let local_groups: Vec<usize> = rows.iter().map(|&i| groups[i]).collect();
    let (dense, n_groups) = dense_groups(&local_groups);
    let k = cfg.inner_folds.min(n_groups);
    if k < 2 {
        return None;
    }
    let inner = grouped_folds(&dense, n_groups, k, seed);
    let mut best: Option<(Selection, Vec<f64>)> = None;
    for &alpha in &cfg.alphas {
        let lambdas = full.problem.lambda_path(alpha, cfg.n_lambda, cfg.lambda_min_ratio);
        let mut sums = vec![0.0; lambdas.len()];
        let mut used = 0usize;
        for f in 0..k {
            let (tr, va) = split(&inner, f);
            let tr: Vec<usize> = tr.iter().map(|&i| rows[i]).collect();
            let va: Vec<usize> = va.iter().map(|&i| rows[i]).collect();
            let yv: Array1<f64> = va.iter().map(|&i| y[i]).collect();
            let yv_mean = yv.mean().unwrap_or(0.0);
            if yv.iter().all(|v| (v - yv_mean).abs() < 1e-12) {
                continue;
            }
            let sp = SplitProblem::new(x, y, &tr);
            let path = sp.problem.fit_path(&lambdas, alpha, cfg);
            for (i, fit) in path.iter().enumerate() {
                let pred = sp.predict(x, &va, fit);
                sums[i] += r2_score(yv.view(), pred.view()).unwrap_or(0.0);
            }
            used += 1;
        }
        if used == 0 {
            continue;
        }
        for (i, s) in sums.iter().enumerate() {
            let score = s / used as f64;
            if best.as_ref().is_none_or(|(b, _)| score > b.inner_r2) {
                best = Some((
                    Selection { lambda: lambdas[i], alpha, inner_r2: score },
                    lambdas[..=i].to_vec(),
                ));
            }
        }
    }
    best
}

/// Fits along `path` with warm starts and returns the last fit.
pub(crate) fn refit(problem: &GramProblem, path: &[f64], alpha: f64, cfg: &FitConfig) -> FitResult {
    problem.fit_path(path, alpha, cfg).pop().expect("nonempty path")
}

/// Nested cross-validated out-of-sample R² with rows grouped so that rows of
/// the same group never straddle a split.
pub fn cv_r2_grouped(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    groups: &[usize],
    cfg: &FitConfig,
) -> Result<CvReport> {
    let n = x.nrows();
    if y.len() != n || groups.len() != n {
        return Err(LensError::LengthMismatch { rows: n, outcomes: y.len() });
    }
    if n < 10 {
        return Err(LensError::TooFewRows { needed: 10, got: n });
    }
    let (dense, n_groups) = dense_groups(groups);
    if n_groups < cfg.outer_folds {
        return Err(LensError::TooFewRows { needed: cfg.outer_folds, got: n_groups });
    }
    let folds = grouped_folds(&dense, n_groups, cfg.outer_folds, cfg.seed);
    let results: Vec<(Option<f64>, Option<Selection>, Option<String>)> = (0..cfg.outer_folds)
        .into_par_iter()
        .map(|f| {
            let (train, test) = split(&folds, f);
            let yt: Array1<f64> = test.iter().map(|&i| y[i]).collect();
            let Some(_) = r2_score(yt.view(), yt.view()) else {
                return (None, None, Some(format!("fold {f} skipped: held-out outcome has zero variance")));
            };
            let Some((sel, path)) = select_hyper(x, y, &train, groups, cfg, derive_seed(cfg.seed, f as u64)) else {
                return (None, None, Some(format!("fold {f} skipped: no usable inner folds")));
            };
            let sp = SplitProblem::new(x, y, &train);
            let fit = refit(&sp.problem, &path, sel.alpha, cfg);
            let note = (!fit.converged).then(|| format!("fold {f}: refit did not converge"));
            let pred = sp.predict(x, &test, &fit);
            (r2_score(yt.view(), pred.view()), Some(sel), note)
        })
        .collect();
    let mut report = CvReport {
        fold_r2: Vec::new(),
        mean_r2: None,
        selected: Vec::new(),
        seed: cfg.seed,
        notes: Vec::new(),
    };
    for (r2, sel, note) in results {
        report.fold_r2.push(r2);
        report.selected.push(sel);
        if let Some(n) = note {
            log::warn!("{n}");
            report.notes.push(n);
        }
    }
    let valid: Vec<f64> = report.fold_r2.iter().flatten().copied().collect();
    if !valid.is_empty() {
        report.mean_r2 = Some(valid.iter().sum::<f64>() / valid.len() as f64);
    }
    Ok(report)
}

/// Nested cross-validated out-of-sample R² with one group per row.
pub fn cv_r2(x: ArrayView2<f64>, y: ArrayView1<f64>, cfg: &FitConfig) -> Result<CvReport> {
    let groups: Vec<usize> = (0..x.nrows()).collect();
    cv_r2_grouped(x, y, &groups, cfg)
}
