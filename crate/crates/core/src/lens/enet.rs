use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// L1 ratios searched by inner cross-validation.
    pub alphas: Vec<f64>,
    pub n_lambda: usize,
    /// Smallest path value as a fraction of λ_max.
    pub lambda_min_ratio: f64,
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            alphas: vec![0.1, 0.5, 0.9],
            n_lambda: 50,
            lambda_min_ratio: 1e-4,
            outer_folds: 5,
            inner_folds: 5,
            seed: 0,
            tol: 1e-7,
            max_sweeps: 100_000,
        }
    }
}

impl FitConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub alpha: f64,
    /// Objective value after each full sweep.
    pub objective_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Zero-variance columns left out of the fit (coefficient 0).
    pub excluded: Vec<usize>,
}

fn soft_threshold(z: f64, g: f64) -> f64 {
    if z > g {
        z - g
    } else if z < -g {
        z + g
    } else {
        0.0
    }
}

/// Sufficient statistics of a centred least-squares problem, so that
/// repeated fits along a λ path cost O(p²) per sweep regardless of n.
#[derive(Debug, Clone)]
pub struct GramProblem {
    n: usize,
    gram: Array2<f64>,
    xty: Array1<f64>,
    yty: f64,
    x_mean: Array1<f64>,
    y_mean: f64,
    active: Vec<bool>,
}

impl GramProblem {
    /// Centres `x` and `y` internally; columns with zero variance are
    /// marked inactive.
    pub fn new(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Self {
        let n = x.nrows();
        assert!(n >= 1 && y.len() == n, "x and y must have matching, nonzero length");
        let x_mean = x.mean_axis(Axis(0)).expect("nonempty");
        let y_mean = y.mean().expect("nonempty");
        let xc = &x - &x_mean;
        let yc = &y - y_mean;
        let nf = n as f64;
        let gram = xc.t().dot(&xc) / nf;
        let xty = xc.t().dot(&yc) / nf;
        let yty = yc.dot(&yc) / nf;
        let active = (0..x.ncols()).map(|j| gram[[j, j]] > 1e-12).collect();
        Self { n, gram, xty, yty, x_mean, y_mean, active }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.xty.len()
    }

    /// Smallest λ at which every coefficient is zero for this α.
    pub fn lambda_max(&self, alpha: f64) -> f64 {
        let m = (0..self.p())
            .filter(|&j| self.active[j])
            .map(|j| self.xty[j].abs())
            .fold(0.0, f64::max);
        m / alpha.max(1e-12)
    }

    /// Geometric λ grid from λ_max down to `ratio · λ_max`.
    pub fn lambda_path(&self, alpha: f64, len: usize, ratio: f64) -> Vec<f64> {
        let top = self.lambda_max(alpha);
        if len <= 1 || top == 0.0 {
            return vec![top];
        }
        let step = ratio.ln() / (len - 1) as f64;
        (0..len).map(|i| top * (step * i as f64).exp()).collect()
    }

    fn objective(&self, beta: &[f64], gbeta: &[f64], lambda: f64, alpha: f64) -> f64 {
        let mut quad = 0.0;
        let mut lin = 0.0;
        let mut l1 = 0.0;
        let mut l2 = 0.0;
        for j in 0..beta.len() {
            quad += beta[j] * gbeta[j];
            lin += self.xty[j] * beta[j];
            l1 += beta[j].abs();
            l2 += beta[j] * beta[j];
        }
        0.5 * (self.yty - 2.0 * lin + quad) + lambda * (alpha * l1 + 0.5 * (1.0 - alpha) * l2)
    }

    /// Cyclic coordinate descent from `warm` (or zero).
    pub fn fit(&self, lambda: f64, alpha: f64, warm: Option<&[f64]>, cfg: &FitConfig) -> FitResult {
        let p = self.p();
        let mut beta: Vec<f64> = warm.map(|w| w.to_vec()).unwrap_or_else(|| vec![0.0; p]);
        for j in 0..p {
            if !self.active[j] {
                beta[j] = 0.0;
            }
        }
        let mut gbeta = vec![0.0; p];
        for j in 0..p {
            if beta[j] != 0.0 {
                for k in 0..p {
                    gbeta[k] += self.gram[[k, j]] * beta[j];
                }
            }
        }
        let l1 = lambda * alpha;
        let l2 = lambda * (1.0 - alpha);
        let mut trace = Vec::new();
        let mut converged = false;
        let mut sweeps = 0;
        while sweeps < cfg.max_sweeps {
            sweeps += 1;
            let mut max_delta: f64 = 0.0;
            for j in 0..p {
                if !self.active[j] {
                    continue;
                }
                let gjj = self.gram[[j, j]];
                let rho = self.xty[j] - gbeta[j] + gjj * beta[j];
                let new = soft_threshold(rho, l1) / (gjj + l2);
                let delta = new - beta[j];
                if delta != 0.0 {
                    for k in 0..p {
                        gbeta[k] += self.gram[[k, j]] * delta;
                    }
                    beta[j] = new;
                    max_delta = max_delta.max(delta.abs());
                }
            }
            trace.push(self.objective(&beta, &gbeta, lambda, alpha));
            if max_delta < cfg.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            log::warn!("coordinate descent hit {} sweeps at lambda {lambda:.3e}", cfg.max_sweeps);
        }
        let intercept = self.y_mean - beta.iter().zip(self.x_mean.iter()).map(|(b, m)| b * m).sum::<f64>();
        FitResult {
            coefficients: beta,
            intercept,
            lambda,
            alpha,
            objective_trace: trace,
            sweeps,
            converged,
            excluded: (0..p).filter(|&j| !self.active[j]).collect(),
        }
    }

    /// Fits the whole path with warm starts; one result per λ.
    pub fn fit_path(&self, lambdas: &[f64], alpha: f64, cfg: &FitConfig) -> Vec<FitResult> {
        let mut out: Vec<FitResult> = Vec::with_capacity(lambdas.len());
        for &l in lambdas {
            let warm = out.last().map(|r| r.coefficients.clone());
            out.push(self.fit(l, alpha, warm.as_deref(), cfg));
        }
        out
    }
}

/// Elastic Net fit minimising
/// `(1/2n)‖y − Xβ‖² + λ(α‖β‖₁ + (1−α)/2 ‖β‖²)` by coordinate descent.
/// `x` is expected to be standardized and `y` centred; both are centred
/// again internally so the intercept is always reported.
pub fn enet_fit(x: ArrayView2<f64>, y: ArrayView1<f64>, lambda: f64, alpha: f64, cfg: &FitConfig) -> FitResult {
    let problem = GramProblem::new(x, y);
    if !problem.active.iter().all(|a| *a) {
        log::warn!("excluding zero-variance columns from the fit");
    }
    problem.fit(lambda, alpha, None, cfg)
}

pub fn predict(x: ArrayView2<f64>, fit: &FitResult) -> Array1<f64> {
    x.dot(&ArrayView1::from(&fit.coefficients)) + fit.intercept
}
