use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::PlantedSpec;
use crate::survey::{
    AlterAttribute, Alter, AttitudeConstruct, AttitudeItem, AttrValue, ConstructDef, DemographicField, DomainConfig,
    EgoNetwork, FeatureSource, RespondentProfile,
};

const ALTER_LABELS: [&str; 6] = ["pp", "cc", "sh", "jk", "mn", "tr"];

fn indicator_alternatives(field: &str) -> &'static [&'static str] {
    match field {
        "Gender" => &["Male", "Male", "Non-binary"],
        "Race" | "Race/Ethnicity" => &["Black or African American", "Asian", "Hispanic or Latino", "Other"],
        "Region" => &["Non-capital Region"],
        _ => &["Other"],
    }
}

fn single_item(def: &ConstructDef, domain: &DomainConfig) -> bool {
    def.name.starts_with("Political")
        || def.scale.levels() > 7
        || domain
            .features
            .iter()
            .any(|f| matches!(&f.source, FeatureSource::ConstructIndicator { construct, .. } if *construct == def.name))
}

fn demographics(domain: &DomainConfig, rng: &mut ChaCha8Rng) -> Vec<DemographicField> {
    let mut out: Vec<DemographicField> = Vec::new();
    for f in &domain.features {
        let (field, value) = match &f.source {
            FeatureSource::Numeric { field } => {
                let age: f64 = Normal::new(47.0, 16.0).expect("sd > 0").sample(rng);
                (field, AttrValue::Number(age.round().clamp(18.0, 90.0)))
            }
            FeatureSource::Indicator { field, level } => {
                let v = if rng.random_bool(0.5) {
                    level.clone()
                } else {
                    indicator_alternatives(field).choose(rng).expect("nonempty").to_string()
                };
                (field, AttrValue::Text(v))
            }
            FeatureSource::Ordinal { field, levels } => (field, AttrValue::Text(levels.choose(rng).expect("levels").clone())),
            _ => continue,
        };
        if !out.iter().any(|d| &d.name == field) {
            out.push(DemographicField { name: field.clone(), value });
        }
    }
    out
}

fn attitudes(domain: &DomainConfig, rng: &mut ChaCha8Rng) -> Vec<AttitudeConstruct> {
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    domain
        .constructs
        .iter()
        .map(|def| {
            let (lo, hi) = (def.scale.min as f64, def.scale.max as f64);
            let mid = (lo + hi) / 2.0;
            let spread = (hi - lo) / 4.0;
            let latent: f64 = std_normal.sample(rng);
            let n_items = if single_item(def, domain) { 1 } else { 3 };
            let items = (0..n_items)
                .map(|k| {
                    let raw = if n_items == 1 && def.scale.levels() <= 4 && !def.name.starts_with("Political") {
                        rng.random_range(def.scale.min..=def.scale.max)
                    } else {
                        let v = mid + spread * (latent + 0.5 * std_normal.sample(rng));
                        v.round().clamp(lo, hi) as i64
                    };
                    AttitudeItem { prompt: format!("{} item {}", def.name, k + 1), response: raw, label: None }
                })
                .collect();
            AttitudeConstruct { construct: def.name.clone(), items }
        })
        .collect()
}

fn alter_value(attr: &AlterAttribute, rng: &mut ChaCha8Rng) -> AttrValue {
    if !attr.levels.is_empty() {
        return AttrValue::Text(attr.levels.choose(rng).expect("levels").clone());
    }
    match attr.key.as_str() {
        "gender" => AttrValue::Text(["Male", "Female", "Female", "Male", "Other"].choose(rng).expect("set").to_string()),
        "age" => AttrValue::Number(rng.random_range(16..=85) as f64),
        "race" => AttrValue::Text(["White", "White", "Black", "Asian", "Hispanic"].choose(rng).expect("set").to_string()),
        "relationship" => {
            AttrValue::Text(["Family", "Friend", "Coworker", "Acquaintance"].choose(rng).expect("set").to_string())
        }
        "closeness" => AttrValue::Number(rng.random_range(1..=5) as f64),
        "duration" => AttrValue::Number(rng.random_range(1..=40) as f64),
        "info_support" => AttrValue::Bool(rng.random_bool(0.4)),
        _ => AttrValue::Number(rng.random_range(1..=5) as f64),
    }
}

fn network(domain: &DomainConfig, spec: &PlantedSpec, rng: &mut ChaCha8Rng) -> EgoNetwork {
    let size = if rng.random_bool(0.05) { 1 } else { rng.random_range(2..=5) };
    let alters: Vec<Alter> = ALTER_LABELS[..size]
        .iter()
        .map(|label| {
            let mut flags = BTreeSet::new();
            if let Some(flag) = &domain.discussant_flag {
                if rng.random_bool(0.6) {
                    flags.insert(flag.clone());
                }
            }
            Alter {
                label: label.to_string(),
                attributes: domain.alter_schema.iter().map(|a| (a.key.clone(), alter_value(a, rng))).collect(),
                flags,
            }
        })
        .collect();
    let mut ties = Vec::new();
    for i in 0..size {
        for j in i + 1..size {
            if rng.random_bool(spec.tie_probability) {
                ties.push([alters[i].label.clone(), alters[j].label.clone()]);
            }
        }
    }
    let awareness = domain.awareness_scale.as_ref().map(|s| rng.random_range(s.min..=s.max));
    EgoNetwork { alters, ties, awareness }
}

/// Profiles drawn from the domain schema; deterministic per `spec.seed`.
pub fn gen_profiles(spec: &PlantedSpec) -> Vec<RespondentProfile> {
    let domain = DomainConfig::builtin(spec.domain);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.n)
        .map(|i| RespondentProfile {
            id: format!("{}-{:05}", spec.domain, i + 1),
            domain: spec.domain,
            demographics: demographics(&domain, &mut rng),
            attitudes: attitudes(&domain, &mut rng),
            network: network(&domain, spec, &mut rng),
        })
        .collect()
}
