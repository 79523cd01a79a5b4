use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, Axis};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use simdiverge::lens::*;
use simdiverge::survey::{Block, ColumnMeta, DesignMatrix};

fn gaussian(n: usize, p: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, p), |_| rng.sample(StandardNormal))
}

fn noise(n: usize, sd: f64, seed: u64) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn centred(y: &Array1<f64>) -> Array1<f64> {
    y - y.mean().unwrap()
}

fn design(x: Array2<f64>, blocks: &[Block]) -> DesignMatrix {
    let columns = blocks
        .iter()
        .enumerate()
        .map(|(j, &block)| ColumnMeta { name: format!("x{j:02}"), block, zero_variance: false, imputed: 0 })
        .collect();
    DesignMatrix { row_ids: (0..x.nrows()).map(|i| format!("r{i:04}")).collect(), columns, values: x }
}

fn quick() -> FitConfig {
    FitConfig { n_lambda: 20, ..FitConfig::default() }
}

#[test]
fn zero_penalty_matches_normal_equations() {
    let x = standardize(gaussian(200, 10, 1).view());
    let beta: Array1<f64> = (0..10).map(|j| j as f64 * 0.3 - 1.2).collect();
    let y = centred(&(x.dot(&beta) + noise(200, 0.5, 2)));
    let fit = enet_fit(x.view(), y.view(), 0.0, 0.5, &FitConfig::default());
    assert!(fit.converged);

    let xm = DMatrix::from_fn(200, 10, |i, j| x[[i, j]]);
    let yv = DVector::from_iterator(200, y.iter().copied());
    let ols = (xm.transpose() * &xm).lu().solve(&(xm.transpose() * yv)).unwrap();
    for j in 0..10 {
        assert!((fit.coefficients[j] - ols[j]).abs() < 1e-6, "coef {j}: {} vs {}", fit.coefficients[j], ols[j]);
    }
}

#[test]
fn path_head_zeroes_everything() {
    let x = standardize(gaussian(120, 6, 3).view());
    let y = centred(&(x.column(0).to_owned() * 2.0 + noise(120, 1.0, 4)));
    let problem = GramProblem::new(x.view(), y.view());
    let lmax = problem.lambda_max(1.0);
    for l in [lmax, lmax * 1.5] {
        let fit = enet_fit(x.view(), y.view(), l, 1.0, &FitConfig::default());
        assert!(fit.coefficients.iter().all(|&b| b == 0.0));
    }
    let below = enet_fit(x.view(), y.view(), lmax * 0.99, 1.0, &FitConfig::default());
    assert!(below.coefficients.iter().any(|&b| b != 0.0));
}

#[test]
fn univariate_soft_threshold() {
    let x0 = gaussian(150, 1, 5);
    let y0 = x0.column(0).to_owned() * 0.6 + noise(150, 1.0, 6);
    let x = standardize(x0.view());
    let y = &y0 - y0.mean().unwrap();
    let y = &y / y.std(0.0);
    let r: f64 = x.column(0).dot(&y) / 150.0;
    for lambda in [0.0, 0.1, r.abs() * 0.5, r.abs() + 0.01] {
        let fit = enet_fit(x.view(), y.view(), lambda, 1.0, &FitConfig::default());
        let expect = r.signum() * (r.abs() - lambda).max(0.0);
        assert!((fit.coefficients[0] - expect).abs() < 1e-10);
    }
}

#[test]
fn zero_variance_column_is_excluded() {
    let mut x = gaussian(50, 3, 7);
    x.column_mut(1).fill(2.0);
    let y = centred(&(x.column(0).to_owned() + noise(50, 0.1, 8)));
    let fit = enet_fit(x.view(), y.view(), 0.01, 0.5, &FitConfig::default());
    assert_eq!(fit.excluded, vec![1]);
    assert_eq!(fit.coefficients[1], 0.0);
}

#[test]
fn non_convergence_is_flagged() {
    let x = gaussian(60, 4, 9);
    let y = centred(&x.column(0).to_owned());
    let cfg = FitConfig { max_sweeps: 1, tol: 1e-300, ..FitConfig::default() };
    let fit = enet_fit(x.view(), y.view(), 0.01, 0.5, &cfg);
    assert!(!fit.converged);
    assert_eq!(fit.sweeps, 1);
}

#[test]
fn noiseless_planted_model_is_recovered() {
    let x = gaussian(300, 8, 10);
    let beta = Array1::from(vec![1.0, -0.5, 0.8, 0.0, 0.0, 0.3, 0.0, -1.1]);
    let y = x.dot(&beta) + 4.0;
    let report = cv_r2(x.view(), y.view(), &quick()).unwrap();
    assert!(report.mean_r2.unwrap() >= 0.999, "{report:?}");
    assert_eq!(report.fold_r2.len(), 5);
}

#[test]
fn pure_noise_has_no_predictive_power() {
    let x = gaussian(500, 10, 11);
    let y = noise(500, 1.0, 12);
    let report = cv_r2(x.view(), y.view(), &quick()).unwrap();
    assert!(report.mean_r2.unwrap() <= 0.05);
}

#[test]
fn cv_is_deterministic_and_seed_stable() {
    let x = gaussian(200, 6, 13);
    let y = x.column(0).to_owned() + x.column(2).to_owned() * 0.5 + noise(200, 0.8, 14);
    let a = cv_r2(x.view(), y.view(), &quick()).unwrap();
    let b = cv_r2(x.view(), y.view(), &quick()).unwrap();
    assert_eq!(a, b);
    let r2: Vec<f64> =
        (0..10).map(|s| cv_r2(x.view(), y.view(), &quick().with_seed(s)).unwrap().mean_r2.unwrap()).collect();
    let mean = r2.iter().sum::<f64>() / 10.0;
    assert!(r2.iter().all(|r| (r - mean).abs() <= 0.05), "{r2:?}");
}

#[test]
fn constant_fold_outcome_is_skipped() {
    let x = gaussian(10, 2, 15);
    let y = Array1::from_elem(10, 3.0);
    let report = cv_r2(x.view(), y.view(), &quick()).unwrap();
    assert!(report.fold_r2.iter().all(Option::is_none));
    assert_eq!(report.mean_r2, None);
    assert_eq!(report.notes.len(), 5);
}

#[test]
fn too_few_rows_is_an_error() {
    let x = gaussian(9, 2, 16);
    assert!(cv_r2(x.view(), noise(9, 1.0, 1).view(), &quick()).is_err());
}

const BLOCKS: [Block; 6] =
    [Block::Network, Block::Network, Block::Attitudinal, Block::Attitudinal, Block::Demographic, Block::Demographic];

#[test]
fn block_removal_on_planted_models() {
    let x = gaussian(400, 6, 17);
    // network carries nothing
    let y = x.column(2).to_owned() + x.column(4).to_owned() * 0.7 + noise(400, 0.5, 18);
    let report = block_removal(&design(x.clone(), &BLOCKS), y.view(), &quick()).unwrap();
    let net = report.blocks.iter().find(|b| b.block == Block::Network).unwrap();
    assert!(net.retained_pct.unwrap() >= 95.0, "{:?}", net.retained_pct);

    // attitudes carry everything
    let y = x.column(2).to_owned() - x.column(3).to_owned() + noise(400, 0.3, 19);
    let report = block_removal(&design(x, &BLOCKS), y.view(), &quick()).unwrap();
    let att = report.blocks.iter().find(|b| b.block == Block::Attitudinal).unwrap();
    assert!(att.retained_pct.unwrap() <= 10.0, "{:?}", att.retained_pct);
}

#[test]
fn removing_an_empty_block_retains_everything() {
    let x = gaussian(100, 3, 20);
    let y = x.column(0).to_owned() + noise(100, 0.5, 21);
    let dm = design(x, &[Block::Attitudinal, Block::Demographic, Block::Demographic]);
    let report = block_removal(&dm, y.view(), &quick()).unwrap();
    let net = report.blocks.iter().find(|b| b.block == Block::Network).unwrap();
    assert_eq!(net.removed_columns, 0);
    assert_eq!(net.retained_pct, Some(100.0));
}

#[test]
fn ratios_suppressed_without_signal() {
    let x = gaussian(200, 6, 22);
    let y = noise(200, 1.0, 23);
    let report = block_removal(&design(x, &BLOCKS), y.view(), &quick()).unwrap();
    if report.r2_full.unwrap() <= 0.0 {
        assert!(report.blocks.iter().all(|b| b.retained_pct.is_none() && b.r2_removed.is_some()));
    }
}

fn paired(n: usize, seed: u64, slopes_h: &[f64], slopes_s: &[f64]) -> (DesignMatrix, Array1<f64>, DesignMatrix, Array1<f64>) {
    let x = gaussian(n, slopes_h.len(), seed);
    let yh = x.dot(&Array1::from(slopes_h.to_vec())) + noise(n, 0.5, seed + 1);
    let ys = x.dot(&Array1::from(slopes_s.to_vec())) + noise(n, 0.5, seed + 2);
    let d = design(x, &BLOCKS);
    (d.clone(), yh, d, ys)
}

#[test]
fn indistinguishable_sources_have_no_sim_terms() {
    let (xh, yh, xs, _) = paired(150, 30, &[0.2, 0.0, 0.5, 0.3, 0.0, 0.1], &[0.0; 6]);
    let report = pooled_interaction(&xh, yh.view(), &xs, yh.view(), &quick(), 7).unwrap();
    assert!(report.lambda > 0.0);
    assert!(report.sim_indicator.abs() < 1e-6);
    assert!(report.interactions.iter().all(|b| b.abs() < 1e-6), "{:?}", report.interactions);
}

#[test]
fn amplified_slope_tops_the_interaction_ranking() {
    let h = [0.2, 0.1, 0.3, 0.2, 0.1, 0.1];
    let mut s = h;
    s[2] *= 3.0;
    let (xh, yh, xs, ys) = paired(400, 40, &h, &s);
    let report = pooled_interaction(&xh, yh.view(), &xs, ys.view(), &quick(), 7).unwrap();
    assert!(report.interaction("x02").unwrap() > 0.0);
    assert!(report.rank_of("x02").unwrap() < 3);
    assert_eq!(report.top.len(), 6);
}

#[test]
fn swapping_sources_flips_sim_terms() {
    let (xh, yh, xs, ys) = paired(120, 50, &[0.2, 0.0, 0.5, 0.3, 0.0, 0.1], &[0.0, 0.4, 0.9, 0.0, 0.2, 0.1]);
    let a = pooled_interaction(&xh, yh.view(), &xs, ys.view(), &quick(), 7).unwrap();
    let b = pooled_interaction(&xs, ys.view(), &xh, yh.view(), &quick(), 7).unwrap();
    assert!((a.sim_indicator + b.sim_indicator).abs() < 1e-6);
    for j in 0..6 {
        assert!((a.interactions[j] + b.interactions[j]).abs() < 1e-6);
        assert!((a.main_effects[j] - b.main_effects[j]).abs() < 1e-6);
    }
}

#[test]
fn schema_mismatch_is_rejected() {
    let (xh, yh, xs, ys) = paired(40, 60, &[0.1; 6], &[0.1; 6]);
    let xs = xs.without_block(Block::Network);
    assert!(matches!(
        pooled_interaction(&xh, yh.view(), &xs, ys.view(), &quick(), 7),
        Err(LensError::Schema(_))
    ));
}

#[test]
fn ranking_ties_break_by_name() {
    let names: Vec<String> = ["b", "a", "c"].iter().map(|s| s.to_string()).collect();
    let top = rank_terms(&names, &[0.5, -0.5, 0.1], 2);
    assert_eq!(top[0].feature, "a");
    assert_eq!(top[1].feature, "b");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn objective_never_increases(seed in 0u64..1000, lambda in 0.0f64..0.5, alpha in 0.05f64..1.0) {
        let x = standardize(gaussian(40, 5, seed).view());
        let y = centred(&(x.column(0).to_owned() - x.column(3).to_owned() + noise(40, 1.0, seed + 7)));
        let fit = enet_fit(x.view(), y.view(), lambda, alpha, &FitConfig::default());
        for w in fit.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        prop_assert!(fit.coefficients.iter().all(|b| b.is_finite()));
    }

    #[test]
    fn duplicated_rows_leave_the_fit_unchanged(seed in 0u64..1000, lambda in 0.001f64..0.3) {
        let x = standardize(gaussian(30, 4, seed).view());
        let y = centred(&(x.column(1).to_owned() + noise(30, 1.0, seed + 3)));
        let xx = ndarray::concatenate(Axis(0), &[x.view(), x.view()]).unwrap();
        let yy = ndarray::concatenate(Axis(0), &[y.view(), y.view()]).unwrap();
        let a = enet_fit(x.view(), y.view(), lambda, 0.5, &FitConfig::default());
        let b = enet_fit(xx.view(), yy.view(), lambda, 0.5, &FitConfig::default());
        for (p, q) in a.coefficients.iter().zip(&b.coefficients) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn column_scaling_is_absorbed(seed in 0u64..200, c in 0.01f64..100.0, col in 0usize..6) {
        let x = gaussian(80, 6, seed);
        let y = x.column(0).to_owned() * 0.8 + x.column(3).to_owned() * 0.4 + noise(80, 0.7, seed + 5);
        let mut xc = x.clone();
        xc.column_mut(col).mapv_inplace(|v| v * c);
        let cfg = FitConfig { n_lambda: 10, ..FitConfig::default() };
        let a = cv_r2(x.view(), y.view(), &cfg).unwrap();
        let b = cv_r2(xc.view(), y.view(), &cfg).unwrap();
        prop_assert!((a.mean_r2.unwrap() - b.mean_r2.unwrap()).abs() < 1e-6);
        let fa = enet_fit(standardize(x.view()).view(), centred(&y).view(), 0.05, 0.5, &FitConfig::default());
        let fb = enet_fit(standardize(xc.view()).view(), centred(&y).view(), 0.05, 0.5, &FitConfig::default());
        for (p, q) in fa.coefficients.iter().zip(&fb.coefficients) {
            prop_assert!((p - q).abs() < 1e-6);
        }
    }
}
