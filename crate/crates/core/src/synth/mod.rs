//! Synthetic paired human/simulated datasets with planted, recorded ground
//! truth.

mod outcomes;
mod profiles;
mod spans;

pub use outcomes::{bin_by_rank, gen_paired_outcomes, noise_sd_for_r2, sim_source, LatentOutcomes, PairedOutcomes};
pub use profiles::gen_profiles;
pub use spans::gen_spans;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::survey::{Block, Dataset, DomainConfig, DomainId, FeatureSpec, RespondentProfile, SurveyError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Noise {
    Fixed { human: f64, sim: f64 },
    /// Human noise set for this population R² on the latent belief; the
    /// simulated sd is the human sd divided by `sim_ratio`.
    TargetR2 { human_r2: f64, sim_ratio: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub domain: DomainId,
    pub n: usize,
    pub seed: u64,
    /// Human belief slope per feature name, in standardized units.
    pub coefficients: BTreeMap<String, f64>,
    pub noise: Noise,
    /// Simulated slope = human slope × factor; feature entries override
    /// block entries, missing entries mean 1.
    pub block_amplification: BTreeMap<Block, f64>,
    pub feature_amplification: BTreeMap<String, f64>,
    /// Weight of belief in human sharing (the rest is an independent draw).
    pub coupling: f64,
    pub sim_coupling: f64,
    pub sim_sharing_noise: f64,
    /// Per-claim deviation, relative to the latent sd.
    pub claim_noise: f64,
    pub human_skew: f64,
    pub sim_skew: f64,
    pub tie_probability: f64,
    pub sim_model: String,
}

fn slopes(features: &[FeatureSpec], f: impl Fn(usize, &FeatureSpec) -> f64) -> BTreeMap<String, f64> {
    features.iter().enumerate().map(|(i, s)| (s.name.clone(), f(i, s))).collect()
}

impl PlantedSpec {
    fn base(domain: DomainId, n: usize, seed: u64) -> Self {
        Self {
            domain,
            n,
            seed,
            coefficients: BTreeMap::new(),
            noise: Noise::TargetR2 { human_r2: 0.5, sim_ratio: 1.0 },
            block_amplification: BTreeMap::new(),
            feature_amplification: BTreeMap::new(),
            coupling: 0.3,
            sim_coupling: 1.0,
            sim_sharing_noise: 0.05,
            claim_noise: 0.5,
            human_skew: 0.6,
            sim_skew: 1.0,
            tie_probability: 0.67,
            sim_model: "synth-sim".into(),
        }
    }

    /// Network-heavy, noisy human data; simulated data with amplified
    /// attitudinal slopes, no network slopes and a fifth of the noise.
    pub fn paper_pattern(domain: DomainId, n: usize, seed: u64) -> Self {
        let features = DomainConfig::builtin(domain).features;
        let mut s = Self::base(domain, n, seed);
        s.coefficients = slopes(&features, |i, f| match f.block {
            Block::Network => 0.2,
            Block::Attitudinal => 0.12,
            Block::Demographic => if i % 2 == 0 { 0.06 } else { -0.06 },
        });
        s.noise = Noise::TargetR2 { human_r2: 0.25, sim_ratio: 5.0 };
        s.block_amplification = [(Block::Attitudinal, 3.0), (Block::Network, 0.0)].into_iter().collect();
        s
    }

    /// Every feature carries signal; noise set for the requested latent R².
    pub fn target_r2(domain: DomainId, n: usize, seed: u64, r2: f64) -> Self {
        let features = DomainConfig::builtin(domain).features;
        let mut s = Self::base(domain, n, seed);
        s.coefficients = slopes(&features, |i, _| [0.1, 0.2, 0.3][i % 3]);
        s.noise = Noise::TargetR2 { human_r2: r2, sim_ratio: 1.0 };
        s
    }

    /// Simulated trust-in-science slope three times the human one; all other
    /// slopes shared.
    pub fn amplified_trust(domain: DomainId, n: usize, seed: u64) -> Self {
        let mut s = Self::target_r2(domain, n, seed, 0.4);
        s.coefficients.insert("Trust in science".into(), 0.2);
        s.feature_amplification.insert("Trust in science".into(), 3.0);
        s
    }

    pub fn amplification(&self, feature: &str, block: Block) -> f64 {
        self.feature_amplification
            .get(feature)
            .or_else(|| self.block_amplification.get(&block))
            .copied()
            .unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<(), SurveyError> {
        let bad = |m: String| Err(SurveyError::Schema(m));
        if self.n < 2 {
            return bad(format!("synthetic sample needs n ≥ 2, got {}", self.n));
        }
        if !self.coefficients.values().chain(self.block_amplification.values()).chain(self.feature_amplification.values()).all(|v| v.is_finite()) {
            return bad("non-finite planted coefficient".into());
        }
        if !(0.0..=1.0).contains(&self.coupling) || !(0.0..=1.0).contains(&self.sim_coupling) {
            return bad("coupling weights must lie in [0, 1]".into());
        }
        match self.noise {
            Noise::Fixed { human, sim } if human < 0.0 || sim < 0.0 => bad("noise sd must be ≥ 0".into()),
            Noise::TargetR2 { human_r2, sim_ratio } if !(human_r2 > 0.0 && human_r2 < 1.0) || sim_ratio <= 0.0 => {
                bad("target R² must lie in (0, 1) and sim_ratio be positive".into())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub spec: PlantedSpec,
    pub profiles: Vec<RespondentProfile>,
    pub outcomes: PairedOutcomes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub spec: PlantedSpec,
    pub features: Vec<String>,
    pub human_coefficients: Vec<f64>,
    pub sim_coefficients: Vec<f64>,
    pub sigma_human: f64,
    pub sigma_sim: f64,
    /// sha256 of profiles.jsonl, responses.csv and simulated.csv.
    pub sha256: BTreeMap<String, String>,
}

fn sha(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl SynthData {
    pub fn generate(spec: &PlantedSpec) -> Result<Self, SurveyError> {
        spec.validate()?;
        let profiles = gen_profiles(spec);
        let outcomes = gen_paired_outcomes(&profiles, spec)?;
        Ok(Self { spec: spec.clone(), profiles, outcomes })
    }

    /// Human responses as an ingestible dataset.
    pub fn dataset(&self) -> Result<Dataset, SurveyError> {
        let rows = self
            .outcomes
            .human
            .records()
            .iter()
            .map(|r| (r.respondent_id.clone(), r.claim_id.clone(), r.outcome, r.raw));
        Dataset::from_parts(DomainConfig::builtin(self.spec.domain), self.profiles.clone(), rows)
    }

    fn files(&self) -> Result<BTreeMap<&'static str, String>, SurveyError> {
        let ds = self.dataset()?;
        Ok([
            ("profiles.jsonl", ds.profiles_jsonl()),
            ("responses.csv", ds.responses_csv()),
            ("simulated.csv", self.outcomes.simulated.to_csv_string()),
        ]
        .into_iter()
        .collect())
    }

    pub fn manifest(&self) -> Result<SynthManifest, SurveyError> {
        Ok(SynthManifest {
            spec: self.spec.clone(),
            features: self.outcomes.design.columns.iter().map(|c| c.name.clone()).collect(),
            human_coefficients: self.outcomes.human_coefficients.clone(),
            sim_coefficients: self.outcomes.sim_coefficients.clone(),
            sigma_human: self.outcomes.sigma_human,
            sigma_sim: self.outcomes.sigma_sim,
            sha256: self.files()?.into_iter().map(|(k, v)| (k.to_string(), sha(v.as_bytes()))).collect(),
        })
    }

    /// Writes the three data files plus `manifest.json` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<SynthManifest, SurveyError> {
        std::fs::create_dir_all(dir).map_err(|e| SurveyError::io(dir, e))?;
        for (name, body) in self.files()? {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| SurveyError::io(&p, e))?;
        }
        let manifest = self.manifest()?;
        let p = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&p, json + "\n").map_err(|e| SurveyError::io(&p, e))?;
        Ok(manifest)
    }
}

impl SynthManifest {
    pub fn regenerate(&self) -> Result<SynthData, SurveyError> {
        SynthData::generate(&self.spec)
    }

    /// True when `data` reproduces every recorded file hash.
    pub fn verify(&self, data: &SynthData) -> Result<bool, SurveyError> {
        Ok(data.manifest()?.sha256 == self.sha256)
    }
}
