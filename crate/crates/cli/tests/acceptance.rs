//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use simdiverge::analysis::{coupling_table, predictive_tables, DomainInput, GROUND_TRUTH};
use simdiverge::gateway::{
    run_simulation, MockProvider, ModelSpec, ProviderSet, ReasoningChain, RequestKey, ResponseCache, RetryPolicy,
    ScriptedProvider, SimulationConfig,
};
use simdiverge::lens::{cv_r2, enet_fit, pooled_interaction, standardize, FitConfig};
use simdiverge::prompt::{example_profile, PromptForge, PromptMode};
use simdiverge::stats::{emd1d, fleiss_kappa, jaccard, jsd, spearman, AgreementMatrix, UnitHistogram};
use simdiverge::survey::{Dataset, DomainConfig, DomainId, ModelMode, Outcome, PromptFormat};
use simdiverge::synth::{PlantedSpec, SynthData};
use simdiverge::trace::{
    aggregate_direction, classify_direction, collect_spans, extract_variables, extraction_agreement, Direction,
    RawSpan, VariableRoster,
};
use simdiverge_cli::plots::{self, PlotKind};
use simdiverge_cli::{Options, Pipeline, RunConfig, Step};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((a - b).abs() <= tol, format!("{what}: {a} vs {b} (tol {tol:e})"))
}

fn hist(p: &[f64]) -> UnitHistogram {
    UnitHistogram::from_probabilities(p.to_vec()).unwrap()
}

fn random_hist(rng: &mut ChaCha8Rng, bins: usize) -> UnitHistogram {
    let w: Vec<f64> = (0..bins).map(|_| rng.random::<f64>() + 1e-9).collect();
    let s: f64 = w.iter().sum();
    hist(&w.iter().map(|x| x / s).collect::<Vec<_>>())
}

fn criterion_1() -> Check {
    let e = |a: f64, b: f64, what: &str| close(a, b, 1e-9, what);
    let h = UnitHistogram::from_values(&[0.1, 0.2, 0.6], 2).map_err(|e| e.to_string())?;
    e(h.probabilities()[0], 2.0 / 3.0, "binning")?;
    e(jsd(&hist(&[0.4, 0.6]), &hist(&[0.4, 0.6])).unwrap(), 0.0, "jsd identity")?;
    e(jsd(&hist(&[1.0, 0.0]), &hist(&[0.0, 1.0])).unwrap(), 1.0, "jsd disjoint")?;
    let direct = 0.5 * (0.5 * (0.5f64 / 0.75).log2() + 0.5 * 2f64.log2()) + 0.5 * (1.0f64 / 0.75).log2();
    e(jsd(&hist(&[0.5, 0.5]), &hist(&[1.0, 0.0])).unwrap(), direct, "jsd direct")?;
    close(direct, 0.31128, 5e-6, "jsd rounded reference")?;
    e(emd1d(&hist(&[0.3, 0.7]), &hist(&[0.3, 0.7])).unwrap(), 0.0, "emd identity")?;
    e(emd1d(&hist(&[1.0, 0.0]), &hist(&[0.0, 1.0])).unwrap(), 0.5, "emd point masses")?;
    e(emd1d(&hist(&[0.5, 0.5]), &hist(&[1.0, 0.0])).unwrap(), 0.25, "emd half step")?;
    let x = [1.0, 2.0, 3.0, 4.0, 5.0];
    e(spearman(&x, &x).unwrap(), 1.0, "spearman identity")?;
    e(spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0, "spearman antitone")?;
    e(spearman(&x, &[1.0, 3.0, 2.0, 5.0, 4.0]).unwrap(), 1.0 - 6.0 * 4.0 / 120.0, "spearman Σd²=4")?;
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<BTreeSet<_>>();
    e(jaccard(&s(&["a", "b"]), &s(&["a", "b"])), 1.0, "jaccard identity")?;
    e(jaccard(&s(&["a"]), &s(&["b"])), 0.0, "jaccard disjoint")?;
    e(jaccard(&s(&["a", "b", "c"]), &s(&["b", "c", "d"])), 0.5, "jaccard 2/4")?;
    let unanimous = AgreementMatrix::new(vec![vec![3, 0], vec![0, 3]]).unwrap();
    e(fleiss_kappa(&unanimous).unwrap(), 1.0, "kappa perfect")?;
    let p_bar = (1.0 + 1.0 / 3.0) / 2.0;
    let p_e = (4.0f64 / 6.0).powi(2) + (2.0f64 / 6.0).powi(2);
    let m = AgreementMatrix::new(vec![vec![3, 0], vec![1, 2]]).unwrap();
    e(fleiss_kappa(&m).unwrap(), (p_bar - p_e) / (1.0 - p_e), "kappa textbook")?;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rows: Vec<Vec<usize>> = (0..20_000)
        .map(|_| {
            let mut r = vec![0; 3];
            for _ in 0..3 {
                r[rng.random_range(0..3)] += 1;
            }
            r
        })
        .collect();
    let k = fleiss_kappa(&AgreementMatrix::new(rows).unwrap()).unwrap();
    ensure(k.abs() <= 0.05, format!("random-vote kappa {k}"))?;

    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let (p, q, r) = (random_hist(&mut rng, 20), random_hist(&mut rng, 20), random_hist(&mut rng, 20));
        let pq = emd1d(&p, &q).unwrap();
        e(pq, emd1d(&q, &p).unwrap(), "emd symmetry")?;
        e(jsd(&p, &q).unwrap(), jsd(&q, &p).unwrap(), "jsd symmetry")?;
        let slack = emd1d(&p, &r).unwrap() + emd1d(&r, &q).unwrap() - pq;
        ensure(slack >= -1e-12, format!("triangle inequality violated by {slack}"))?;
        worst = worst.min(slack);
    }
    Ok(format!("all examples within 1e-9; 1000 triples, min triangle slack {worst:.2e}"))
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, p), |_| rng.sample(StandardNormal))
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = FitConfig::default();
    let mut worst_ols = 0.0f64;
    for trial in 0..20 {
        let p = 2 + trial % 14;
        let x = standardize(gaussian(&mut rng, 200, p).view());
        let beta: Array1<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let noise: Array1<f64> = (0..200).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut y = x.dot(&beta) + noise;
        y -= y.mean().unwrap();
        let fit = enet_fit(x.view(), y.view(), 0.0, 0.5, &cfg);
        let xm = DMatrix::from_fn(200, p, |i, j| x[[i, j]]);
        let yv = DVector::from_iterator(200, y.iter().copied());
        let ols = (xm.transpose() * &xm).lu().solve(&(xm.transpose() * yv)).ok_or("singular design")?;
        for j in 0..p {
            let d = (fit.coefficients[j] - ols[j]).abs();
            worst_ols = worst_ols.max(d);
            ensure(d <= 1e-6, format!("trial {trial} coef {j}: |Δ| = {d:e}"))?;
        }
    }
    let mut worst_st = 0.0f64;
    for trial in 0..20 {
        let x0 = gaussian(&mut rng, 150, 1);
        let y0: Array1<f64> = x0.column(0).mapv(|v| 0.5 * v) + (0..150).map(|_| rng.sample::<f64, _>(StandardNormal)).collect::<Array1<f64>>();
        let x = standardize(x0.view());
        let y = &y0 - y0.mean().unwrap();
        let r = x.column(0).dot(&y) / 150.0;
        for lambda in [0.0, r.abs() * 0.3, r.abs() * 0.9, r.abs() * 1.2] {
            let fit = enet_fit(x.view(), y.view(), lambda, 1.0, &cfg);
            let want = r.signum() * (r.abs() - lambda).max(0.0);
            let d = (fit.coefficients[0] - want).abs();
            worst_st = worst_st.max(d);
            ensure(d <= 1e-9, format!("soft threshold trial {trial} λ={lambda}: |Δ| = {d:e}"))?;
        }
    }
    Ok(format!("max |Δ| OLS {worst_ols:.1e}, soft-threshold {worst_st:.1e}"))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn criterion_3() -> Check {
    let mut planted = Vec::new();
    let mut noise = Vec::new();
    for seed in 0..10 {
        let data = SynthData::generate(&PlantedSpec::target_r2(DomainId::Health, 1000, seed, 0.5))
            .map_err(|e| e.to_string())?;
        let cfg = FitConfig::default().with_seed(seed);
        let x = data.outcomes.design.values.view();
        let y = Array1::from(data.outcomes.latent.human_belief.clone());
        planted.push(cv_r2(x, y.view(), &cfg).map_err(|e| e.to_string())?.mean_r2.ok_or("no R²")?);
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let z: Array1<f64> = (0..x.nrows()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        noise.push(cv_r2(x, z.view(), &cfg).map_err(|e| e.to_string())?.mean_r2.ok_or("no R²")?);
    }
    let (mp, mn) = (mean(&planted), mean(&noise));
    ensure((0.42..=0.58).contains(&mp), format!("planted mean R² {mp:.4} outside [0.42, 0.58]: {planted:?}"))?;
    ensure(mn <= 0.05, format!("pure-noise mean R² {mn:.4} > 0.05"))?;
    Ok(format!("planted mean R² {mp:.3}, pure noise {mn:.3}"))
}

fn criterion_4() -> Check {
    let mut lines = Vec::new();
    for seed in 1..=10 {
        let spec = PlantedSpec::paper_pattern(DomainId::Health, 600, seed);
        let data = SynthData::generate(&spec).map_err(|e| e.to_string())?;
        let input = DomainInput {
            domain: DomainConfig::builtin(spec.domain),
            design: data.outcomes.design.clone(),
            human: data.outcomes.human.clone(),
            simulated: data.outcomes.simulated.clone(),
        };
        let coupling = coupling_table(&input);
        let human_rho = coupling.iter().find(|r| r.source == GROUND_TRUTH).and_then(|r| r.rho).ok_or("no human ρ")?;
        let sim_rho = coupling.iter().find(|r| r.source != GROUND_TRUTH).and_then(|r| r.rho).ok_or("no sim ρ")?;
        let cfg = FitConfig::default().with_seed(seed);
        let (r2, blocks) = predictive_tables(&input, &[Outcome::Belief], &cfg).map_err(|e| e.to_string())?;
        let human_r2 = r2.iter().find(|r| r.source == GROUND_TRUTH).and_then(|r| r.r2).ok_or("no human R²")?;
        let sim_r2 = r2.iter().find(|r| r.source != GROUND_TRUTH).and_then(|r| r.r2).ok_or("no sim R²")?;
        let net = |human: bool| {
            blocks
                .iter()
                .find(|b| b.block == "network" && (b.source == GROUND_TRUTH) == human)
                .and_then(|b| b.retained_pct)
        };
        let (net_h, net_s) = (net(true).ok_or("human ratio suppressed")?, net(false).ok_or("sim ratio suppressed")?);
        let tag = format!(
            "seed {seed}: ρ {human_rho:.3}/{sim_rho:.3}, R² {human_r2:.3}/{sim_r2:.3}, network retained {net_h:.0}%/{net_s:.0}%"
        );
        ensure(sim_rho >= human_rho + 0.2, format!("(a) {tag}"))?;
        ensure(sim_r2 >= 3.0 * human_r2, format!("(b) {tag}"))?;
        ensure(net_s >= 90.0 && net_h <= 70.0, format!("(c) {tag}"))?;
        lines.push(tag);
    }
    Ok(format!("10/10 seeds; {}", lines[0]))
}

fn criterion_5() -> Check {
    let mut worst_rank = 0;
    for seed in 1..=10 {
        let spec = PlantedSpec::amplified_trust(DomainId::Health, 600, seed);
        let data = SynthData::generate(&spec).map_err(|e| e.to_string())?;
        let x = &data.outcomes.design;
        let yh = Array1::from(data.outcomes.latent.human_belief.clone());
        let ys = Array1::from(data.outcomes.latent.sim_belief.clone());
        let cfg = FitConfig::default().with_seed(seed);
        let report = pooled_interaction(x, yh.view(), x, ys.view(), &cfg, 7).map_err(|e| e.to_string())?;
        let rank = report.rank_of("Trust in science").ok_or("trust term missing")?;
        let coef = report.interaction("Trust in science").ok_or("trust term missing")?;
        ensure(rank < 3 && coef > 0.0, format!("seed {seed}: S×trust rank {} coefficient {coef}", rank + 1))?;
        worst_rank = worst_rank.max(rank + 1);

        let same = pooled_interaction(x, yh.view(), x, yh.view(), &cfg, 7).map_err(|e| e.to_string())?;
        let max_s = same.interactions.iter().fold(same.sim_indicator.abs(), |m, b| m.max(b.abs()));
        ensure(max_s < 1e-6, format!("seed {seed}: identical sources give S-term {max_s:e}"))?;
    }
    Ok(format!("S×trust positive and ranked ≤ {worst_rank} for 10/10 seeds; identical data S-terms < 1e-6"))
}

fn annotators() -> Vec<ModelSpec> {
    ["ann-a", "ann-b", "ann-c"].iter().map(|m| ModelSpec::new("script", *m, ModelMode::ChatZs).with_retries(0)).collect()
}

fn criterion_6() -> Check {
    let roster = VariableRoster::builtin();
    let names: Vec<String> = roster.names().iter().map(|s| s.to_string()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut provider = ScriptedProvider::new("script");
    let mut chains = Vec::new();
    let mut planned: Vec<Vec<BTreeSet<String>>> = Vec::new();
    for i in 0..500 {
        let id = format!("c{i:03}");
        let mut votes = Vec::new();
        for m in annotators() {
            let k = rng.random_range(0..5);
            let pick: BTreeSet<String> = names.choose_multiple(&mut rng, k).cloned().collect();
            let labels: Vec<String> = pick.iter().map(|v| format!("\"{v}\"")).collect();
            provider.script(&m.model_name, &id, format!(r#"{{"reasoning": "", "label": [{}]}}"#, labels.join(", ")));
            votes.push(pick);
        }
        planned.push(votes);
        chains.push(ReasoningChain {
            chain_id: id,
            request_key: RequestKey {
                respondent_id: format!("r{i}"),
                claim_id: "health-1".into(),
                outcome: Outcome::Belief,
                model: "mock/m@chat_cot".into(),
                format: PromptFormat::Original,
            },
            model: "m".into(),
            mode: ModelMode::ChatCot,
            domain: DomainId::Health,
            outcome: Outcome::Belief,
            text: "reasoning".into(),
        });
    }
    let raw: Vec<RawSpan> = (0..500)
        .map(|i| {
            let v = &names[i % names.len()];
            RawSpan::new(format!("Span {i}: {v} and misinformation sharing in sample {}.", i / names.len()))
        })
        .collect();
    let spans = collect_spans(&raw, &roster);
    let mut planned_dirs = Vec::new();
    for s in &spans {
        let mut votes = Vec::new();
        for m in annotators() {
            let d = *Direction::ALL.choose(&mut rng).expect("labels");
            provider.script(&m.model_name, &s.span_id, format!(r#"{{"reasoning": "", "label": "{}"}}"#, d.as_str()));
            votes.push(d);
        }
        planned_dirs.push(votes);
    }
    let providers = ProviderSet::new().with(Arc::new(provider));
    let policy = RetryPolicy::immediate();

    let mut violations = 0;
    let mut observed = Vec::new();
    for (chain, votes) in chains.iter().zip(&planned) {
        let out = extract_variables(chain, &roster, &annotators(), &providers, &policy).map_err(|e| e.to_string())?;
        let retained = out.retained.ok_or("chain incomplete")?.variables;
        let want: BTreeSet<String> = votes[0].iter().filter(|v| votes[1].contains(*v) && votes[2].contains(*v)).cloned().collect();
        let got_votes: Vec<BTreeSet<String>> = out.votes.iter().map(|v| v.selected.clone()).collect();
        if retained != want || got_votes != *votes || !got_votes.iter().all(|v| retained.is_subset(v)) {
            violations += 1;
        }
        observed.push(got_votes);
    }
    let mut items = Vec::new();
    for (span, votes) in spans.iter().zip(&planned_dirs) {
        let out = classify_direction(span, &roster, &annotators(), &providers, &policy).map_err(|e| e.to_string())?;
        let label = out.label.ok_or("span excluded")?;
        let unanimous = votes.iter().all(|v| *v == votes[0]);
        let want = if unanimous && votes[0] != Direction::Neutral { votes[0] } else { Direction::Neutral };
        if label.label != want || label.votes != *votes || (label.label != Direction::Neutral && !unanimous) {
            violations += 1;
        }
        if aggregate_direction(votes) != want {
            violations += 1;
        }
        items.push(votes.clone());
    }
    ensure(violations == 0, format!("{violations} invariant violations"))?;

    // Brute force: per-chain mean of the three pairwise |a∩b|/|a∪b|.
    let brute: f64 = observed
        .iter()
        .map(|v| {
            let j = |a: &BTreeSet<String>, b: &BTreeSet<String>| {
                let u = a.union(b).count();
                if u == 0 {
                    1.0
                } else {
                    a.intersection(b).count() as f64 / u as f64
                }
            };
            (j(&v[0], &v[1]) + j(&v[0], &v[2]) + j(&v[1], &v[2])) / 3.0
        })
        .sum::<f64>()
        / observed.len() as f64;
    let agreement = extraction_agreement(&observed).ok_or("no agreement")?;
    close(agreement, brute, 1e-12, "extraction agreement")?;

    let cats = Direction::ALL;
    let (n, r) = (items.len() as f64, 3.0);
    let mut p_bar = 0.0;
    let mut totals = [0.0; 3];
    for votes in &items {
        let counts: Vec<f64> = cats.iter().map(|c| votes.iter().filter(|v| *v == c).count() as f64).collect();
        p_bar += (counts.iter().map(|c| c * c).sum::<f64>() - r) / (r * (r - 1.0));
        for (t, c) in totals.iter_mut().zip(&counts) {
            *t += c;
        }
    }
    p_bar /= n;
    let p_e: f64 = totals.iter().map(|t| (t / (n * r)).powi(2)).sum();
    let brute_kappa = (p_bar - p_e) / (1.0 - p_e);
    let kappa = fleiss_kappa(&AgreementMatrix::from_labels(&items, &cats).unwrap()).map_err(|e| e.to_string())?;
    close(kappa, brute_kappa, 1e-12, "fleiss kappa")?;
    Ok(format!(
        "500 chains + {} spans, 0 violations; Jaccard {agreement:.4}, κ {kappa:.4} match brute force",
        spans.len()
    ))
}

fn grid_dataset() -> Dataset {
    let mut domain = DomainConfig::builtin(DomainId::Health);
    domain.claims.truncate(5);
    let data = SynthData::generate(&PlantedSpec::paper_pattern(DomainId::Health, 50, 7)).unwrap();
    let rows: Vec<(String, String, Outcome, i64)> = data
        .outcomes
        .design
        .row_ids
        .iter()
        .flat_map(|id| domain.claims.iter().flat_map(move |c| Outcome::ALL.map(|o| (id.clone(), c.id.clone(), o, 4))))
        .collect();
    Dataset::from_parts(domain, data.profiles.clone(), rows).unwrap()
}

fn criterion_7() -> Check {
    let ds = grid_dataset();
    let forge = PromptForge::builtin(DomainId::Health);
    let models = vec![
        ModelSpec::new("mock", "mock-a", ModelMode::ChatCot).with_retries(12),
        ModelSpec::new("mock", "mock-b", ModelMode::Reasoning).with_retries(12),
    ];
    let cfg = SimulationConfig {
        formats: PromptFormat::ALL.to_vec(),
        outcomes: Outcome::ALL.to_vec(),
        concurrency: 8,
        retry: RetryPolicy::immediate(),
    };
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("cache.jsonl");

    let mock = Arc::new(MockProvider::new("mock", 7));
    let providers = ProviderSet::new().with(mock.clone());
    let mut cache = ResponseCache::open(&path).map_err(|e| e.to_string())?;
    let first = run_simulation(&ds, &forge, &models, &providers, &cfg, &mut cache).map_err(|e| e.to_string())?;
    drop(cache);
    let expected = 50 * 5 * 2 * 3 * 2;
    ensure(first.table.len() == expected, format!("{} of {expected} records", first.table.len()))?;

    let mock2 = Arc::new(MockProvider::new("mock", 7));
    let providers2 = ProviderSet::new().with(mock2.clone());
    let mut cache = ResponseCache::open(&path).map_err(|e| e.to_string())?;
    let second = run_simulation(&ds, &forge, &models, &providers2, &cfg, &mut cache).map_err(|e| e.to_string())?;
    ensure(mock2.calls() == 0, format!("warm rerun made {} calls", mock2.calls()))?;
    ensure(first.table.to_csv_string() == second.table.to_csv_string(), "rerun table differs")?;

    let flaky = Arc::new(MockProvider::new("mock", 7).with_failure_rate(0.2));
    let providers3 = ProviderSet::new().with(flaky.clone());
    let mut cold = ResponseCache::in_memory();
    let third = run_simulation(&ds, &forge, &models, &providers3, &cfg, &mut cold).map_err(|e| e.to_string())?;
    let terminal: usize = third.cells.iter().map(|c| c.ok + c.invalid).sum();
    let failed: usize = third.cells.iter().map(|c| c.failed).sum();
    ensure(terminal == expected && failed == 0, format!("{terminal} terminal, {failed} failed of {expected}"))?;
    ensure(flaky.calls() > expected, "no retries observed")?;
    ensure(third.table.to_csv_string() == first.table.to_csv_string(), "flaky run table differs")?;
    Ok(format!(
        "{expected} records; first run {} calls, rerun 0; 20% failures converged after {} calls",
        mock.calls(),
        flaky.calls()
    ))
}

const GOLDEN_CONFIG: &str = r#"
seed = 11
[[domains]]
id = "health"
synth = { preset = "paper_pattern", n = 60, seed = 1 }
[[domains]]
id = "climate"
synth = { preset = "paper_pattern", n = 60, seed = 2 }
[[domains]]
id = "politics"
synth = { preset = "paper_pattern", n = 60, seed = 3 }
[[providers]]
id = "mock"
kind = "mock"
[[models]]
provider_id = "mock"
model_name = "mock-reasoner"
mode = "reasoning"
[[models]]
provider_id = "mock"
model_name = "mock-chat"
mode = "chat_cot"
[lens]
alphas = [0.5]
n_lambda = 12
inner_folds = 3
[retry]
base_delay_ms = 0
max_delay_ms = 0
[[trace.annotators]]
provider_id = "mock"
model_name = "ann-a"
mode = "chat_zs"
[[trace.annotators]]
provider_id = "mock"
model_name = "ann-b"
mode = "chat_zs"
[[trace.annotators]]
provider_id = "mock"
model_name = "ann-c"
mode = "chat_zs"
"#;

fn artifact_files(out: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![out.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            let rel = p.strip_prefix(out).unwrap().to_string_lossy().replace('\\', "/");
            if p.is_dir() {
                if rel != "cache" {
                    stack.push(p);
                }
            } else {
                files.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn golden_run(out: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let cfg = RunConfig::from_toml_str(GOLDEN_CONFIG).map_err(|e| e.to_string())?;
    let opts = Options { out: Some(out.to_path_buf()), mock: true, ..Options::default() };
    let p = Pipeline::new(cfg, &opts).map_err(|e| e.to_string())?;
    p.run(&Step::ALL).map_err(|e| e.to_string())?;
    simdiverge_cli::report::emit_report(out).map_err(|e| e.to_string())?;
    Ok(artifact_files(out))
}

fn criterion_8() -> Check {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = golden_run(a.path())?;
    let second = golden_run(b.path())?;
    ensure(first.len() == second.len(), "different artifact sets")?;
    for ((na, ba), (nb, bb)) in first.iter().zip(&second) {
        ensure(na == nb, format!("artifact sets differ at {na} / {nb}"))?;
        ensure(ba == bb, format!("{na} differs between runs"))?;
    }
    let names: BTreeSet<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    for required in [
        "step1/divergence.csv",
        "step2/alignment.csv",
        "step3/coupling.csv",
        "step4/r2.csv",
        "step4/block_removal.csv",
        "step5/interactions.csv",
        "step6/frequency.csv",
        "step6/direction.csv",
        "report/report.md",
    ] {
        ensure(names.contains(required), format!("missing {required}"))?;
    }
    for kind in PlotKind::ALL {
        let rel = format!("report/plots/{}.vl.json", kind.file_stem());
        let bytes = &first.iter().find(|(n, _)| *n == rel).ok_or(format!("missing {rel}"))?.1;
        let spec: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
        plots::validate(kind, &spec).map_err(|e| format!("{rel}: {e}"))?;
    }
    Ok(format!("{} artifacts byte-identical across runs; 4 plot specs valid", first.len()))
}

fn criterion_9() -> Check {
    let prompts: [(DomainId, Outcome, &str); 6] = [
        (DomainId::Health, Outcome::Belief, "(1=Inaccurate, 7=Accurate)"),
        (DomainId::Health, Outcome::Sharing, "(1=Strongly disagree; 7=Strongly agree)"),
        (DomainId::Climate, Outcome::Belief, "1. I agree with the information above\n2. I disagree with the information above."),
        (DomainId::Climate, Outcome::Sharing, "1. I am likely to share it with others.\n2. I am unlikely to share it with others."),
        (DomainId::Politics, Outcome::Belief, "(1=Not at all accurate; 4=Very accurate)"),
        (
            DomainId::Politics,
            Outcome::Sharing,
            "(1=No, I would not share it; 2=I would probably share it; 3=Yes, I would share it)",
        ),
    ];
    for (d, outcome, anchor) in prompts {
        let forge = PromptForge::builtin(d);
        let profile = example_profile(d);
        for claim in &forge.domain.claims {
            for format in PromptFormat::ALL {
                let b = forge
                    .assemble_prompt(&profile, claim, outcome, format, PromptMode::Plain)
                    .map_err(|e| e.to_string())?;
                ensure(b.user_text.contains(anchor), format!("{d} {outcome:?} {format}: missing {anchor:?}"))?;
            }
        }
        let lines = |f| {
            let mut v: Vec<String> = forge.render_profile(&profile, f).lines().map(String::from).collect();
            v.retain(|l| !l.trim().is_empty());
            v.sort();
            v
        };
        ensure(lines(PromptFormat::Original) == lines(PromptFormat::AltOrder), format!("{d}: line multisets differ"))?;
    }
    let forge = PromptForge::builtin(DomainId::Health);
    let composite = forge.render_profile(&example_profile(DomainId::Health), PromptFormat::Composite);
    ensure(composite.contains("Network density: 0.67"), "composite health profile lacks \"Network density: 0.67\"")?;
    Ok("anchors present in every bundle; alt_order line multisets equal; composite density 0.67".into())
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Check); 9] = [
        ("statistic exactness", Duration::from_secs(5), criterion_1),
        ("elastic net oracle equivalence", Duration::from_secs(30), criterion_2),
        ("cv calibration", Duration::from_secs(120), criterion_3),
        ("paper-pattern reproduction", Duration::from_secs(300), criterion_4),
        ("interaction recovery", Duration::from_secs(120), criterion_5),
        ("unanimity pipelines", Duration::from_secs(10), criterion_6),
        ("gateway determinism and idempotence", Duration::from_secs(60), criterion_7),
        ("end-to-end golden run", Duration::from_secs(180), criterion_8),
        ("prompt fidelity", Duration::from_secs(1), criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let label = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.ends_with(f.as_str()) || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let result = result.and_then(|m| {
            if took <= *budget {
                Ok(m)
            } else {
                Err(format!("{m}; took {took:.1?}, budget {budget:?}"))
            }
        });
        match result {
            Ok(m) => println!("{label} [{name}]: PASS ({:.2}s) {m}", took.as_secs_f64()),
            Err(m) => {
                failed += 1;
                println!("{label} [{name}]: FAIL ({:.2}s) {m}", took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
