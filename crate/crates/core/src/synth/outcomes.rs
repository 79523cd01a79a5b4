use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Noise, PlantedSpec};
use crate::lens::standardize;
use crate::survey::{
    build_design_matrix, DesignMatrix, DomainConfig, ModelMode, Outcome, PromptFormat, RespondentProfile,
    ResponseRecord, ResponseTable, Result, ScaleSpec, Source,
};

/// Continuous outcomes before discretization, one per respondent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentOutcomes {
    pub human_belief: Vec<f64>,
    pub human_sharing: Vec<f64>,
    pub sim_belief: Vec<f64>,
    pub sim_sharing: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedOutcomes {
    pub design: DesignMatrix,
    pub human: ResponseTable,
    pub simulated: ResponseTable,
    pub latent: LatentOutcomes,
    /// Human belief slope per design column (standardized units).
    pub human_coefficients: Vec<f64>,
    pub sim_coefficients: Vec<f64>,
    pub sigma_human: f64,
    pub sigma_sim: f64,
}

/// Noise sd giving population R² = `r2` for a signal with the sample
/// variance of `signal`.
pub fn noise_sd_for_r2(signal: &[f64], r2: f64) -> f64 {
    let v = Array1::from(signal.to_vec()).var(0.0);
    (v * (1.0 - r2) / r2).sqrt()
}

fn sd(xs: &[f64]) -> f64 {
    Array1::from(xs.to_vec()).std(0.0)
}

/// Equal-rank quantile binning onto the scale's levels. Cumulative level
/// shares follow `(k/K)^skew`, so `skew < 1` piles mass on the least
/// susceptible levels.
pub fn bin_by_rank(values: &[f64], scale: &ScaleSpec, skew: f64) -> Vec<i64> {
    let n = values.len();
    let k = scale.levels();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut out = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        let u = (rank as f64 + 0.5) / n as f64;
        let level = ((k as f64) * u.powf(1.0 / skew)).floor() as usize;
        out[i] = scale.raw_at_level(level.min(k - 1));
    }
    out
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn sim_source(spec: &PlantedSpec) -> Source {
    Source::simulated(spec.sim_model.clone(), ModelMode::ChatZs, PromptFormat::Original)
}

/// Planted human and simulated outcomes for `profiles`.
pub fn gen_paired_outcomes(profiles: &[RespondentProfile], spec: &PlantedSpec) -> Result<PairedOutcomes> {
    let domain = DomainConfig::builtin(spec.domain);
    let design = build_design_matrix(profiles, &domain)?;
    let n = design.n_rows();
    let z = standardize(design.values.view());
    let human_coefficients: Vec<f64> =
        design.columns.iter().map(|c| spec.coefficients.get(&c.name).copied().unwrap_or(0.0)).collect();
    let sim_coefficients: Vec<f64> = design
        .columns
        .iter()
        .zip(&human_coefficients)
        .map(|(c, b)| b * spec.amplification(&c.name, c.block))
        .collect();
    let signal_h = z.dot(&Array1::from(human_coefficients.clone())).to_vec();
    let signal_s = z.dot(&Array1::from(sim_coefficients.clone())).to_vec();
    let (sigma_human, sigma_sim) = match spec.noise {
        Noise::Fixed { human, sim } => (human, sim),
        Noise::TargetR2 { human_r2, sim_ratio } => {
            let h = noise_sd_for_r2(&signal_h, human_r2);
            (h, h / sim_ratio)
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let (e1, e2, e3, e4) = (normals(&mut rng, n), normals(&mut rng, n), normals(&mut rng, n), normals(&mut rng, n));
    let b_h: Vec<f64> = (0..n).map(|i| signal_h[i] + sigma_human * e1[i]).collect();
    let a_h: Vec<f64> = (0..n).map(|i| signal_h[i] + sigma_human * e2[i]).collect();
    let b_s: Vec<f64> = (0..n).map(|i| signal_s[i] + sigma_sim * e3[i]).collect();
    let a_s: Vec<f64> = (0..n).map(|i| signal_s[i] + sigma_sim * e4[i]).collect();
    let c = spec.coupling;
    let cs = spec.sim_coupling;
    let latent = LatentOutcomes {
        human_sharing: (0..n).map(|i| c * b_h[i] + (1.0 - c) * a_h[i]).collect(),
        sim_sharing: (0..n).map(|i| cs * b_s[i] + (1.0 - cs) * a_s[i]).collect(),
        human_belief: b_h,
        sim_belief: b_s,
    };

    let tau_h = spec.claim_noise * sd(&latent.human_belief);
    let tau_s = spec.claim_noise * sd(&latent.sim_belief);
    let nu = spec.sim_sharing_noise * sd(&latent.sim_belief);
    let sim = sim_source(spec);
    let mut human = Vec::new();
    let mut simulated = Vec::new();
    for claim in &domain.claims {
        let (eb, ea, fb, fa, xi) =
            (normals(&mut rng, n), normals(&mut rng, n), normals(&mut rng, n), normals(&mut rng, n), normals(&mut rng, n));
        let hb: Vec<f64> = (0..n).map(|i| latent.human_belief[i] + tau_h * eb[i]).collect();
        let ha: Vec<f64> = (0..n).map(|i| a_h[i] + tau_h * ea[i]).collect();
        let hs: Vec<f64> = (0..n).map(|i| c * hb[i] + (1.0 - c) * ha[i]).collect();
        let sb: Vec<f64> = (0..n).map(|i| latent.sim_belief[i] + tau_s * fb[i]).collect();
        let sa: Vec<f64> = (0..n).map(|i| a_s[i] + tau_s * fa[i]).collect();
        let ss: Vec<f64> = (0..n).map(|i| cs * sb[i] + (1.0 - cs) * sa[i] + nu * xi[i]).collect();
        for (outcome, h, s) in [(Outcome::Belief, &hb, &sb), (Outcome::Sharing, &hs, &ss)] {
            let scale = domain.scale(outcome);
            let hr = bin_by_rank(h, scale, spec.human_skew);
            let sr = bin_by_rank(s, scale, spec.sim_skew);
            for i in 0..n {
                let id = &design.row_ids[i];
                human.push(ResponseRecord::new(id.clone(), claim, outcome, Source::Human, hr[i], &domain)?);
                simulated.push(ResponseRecord::new(id.clone(), claim, outcome, sim.clone(), sr[i], &domain)?);
            }
        }
    }
    Ok(PairedOutcomes {
        design,
        human: ResponseTable::new(human),
        simulated: ResponseTable::new(simulated),
        latent,
        human_coefficients,
        sim_coefficients,
        sigma_human,
        sigma_sim,
    })
}
