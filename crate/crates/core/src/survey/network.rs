//! Egocentric network composites: size, density, attribute proportions and
//! means over (optionally flagged) alters, and perceived mutual awareness.

use std::collections::BTreeMap;

use super::domain::{CompositeKind, CompositeSpec, DomainConfig};
use super::profile::{Alter, EgoNetwork};

/// Composite name → value; `None` marks a composite that is undefined for
/// this network (no alters in scope, density with fewer than two alters).
pub type CompositeValues = BTreeMap<String, Option<f64>>;

pub fn density(network: &EgoNetwork) -> Option<f64> {
    let n = network.size();
    if n < 2 {
        return None;
    }
    let possible = (n * (n - 1) / 2) as f64;
    Some(network.tie_set().len() as f64 / possible)
}

fn in_scope<'a>(network: &'a EgoNetwork, flag: Option<&'a str>) -> impl Iterator<Item = &'a Alter> {
    network
        .alters
        .iter()
        .filter(move |a| flag.is_none_or(|f| a.flags.contains(f)))
}

/// Numeric code of an alter attribute: ordinal levels map to 1..=k,
/// everything else must parse as a number.
pub fn attribute_code(domain: &DomainConfig, alter: &Alter, key: &str) -> Option<f64> {
    let value = alter.attributes.get(key)?;
    match domain.alter_attribute(key) {
        Some(def) if !def.levels.is_empty() => def
            .levels
            .iter()
            .position(|l| value.matches(l))
            .map(|i| (i + 1) as f64),
        _ => value.as_f64(),
    }
}

pub fn compute_composite(network: &EgoNetwork, spec: &CompositeSpec, domain: &DomainConfig) -> Option<f64> {
    match &spec.kind {
        CompositeKind::Size { among_flag } => Some(in_scope(network, among_flag.as_deref()).count() as f64),
        CompositeKind::Density => density(network),
        CompositeKind::Proportion { attribute, value, among_flag } => {
            let observed: Vec<bool> = in_scope(network, among_flag.as_deref())
                .filter_map(|a| a.attributes.get(attribute))
                .map(|v| v.matches(value))
                .collect();
            if observed.is_empty() {
                return None;
            }
            Some(observed.iter().filter(|b| **b).count() as f64 / observed.len() as f64)
        }
        CompositeKind::FlagShare { flag } => {
            if network.size() == 0 {
                return None;
            }
            Some(in_scope(network, Some(flag)).count() as f64 / network.size() as f64)
        }
        CompositeKind::Mean { attribute, among_flag } => {
            let codes: Vec<f64> = in_scope(network, among_flag.as_deref())
                .filter_map(|a| attribute_code(domain, a, attribute))
                .collect();
            if codes.is_empty() {
                return None;
            }
            Some(codes.iter().sum::<f64>() / codes.len() as f64)
        }
        CompositeKind::Awareness => network.awareness.map(|a| a as f64),
    }
}

/// All composites the domain declares for this network.
pub fn compute_network_composites(network: &EgoNetwork, domain: &DomainConfig) -> CompositeValues {
    domain
        .composites
        .iter()
        .map(|spec| {
            let v = compute_composite(network, spec, domain);
            if v.is_none() {
                log::debug!("composite {:?} missing for network of size {}", spec.name, network.size());
            }
            (spec.name.clone(), v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::survey::domain::DomainId;
    use crate::survey::profile::AttrValue;

    fn alter(label: &str, attrs: &[(&str, AttrValue)]) -> Alter {
        Alter {
            label: label.into(),
            attributes: attrs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            flags: BTreeSet::new(),
        }
    }

    fn text(s: &str) -> AttrValue {
        AttrValue::Text(s.into())
    }

    /// Contact block of the illustrative public-health profile.
    fn health_fixture() -> EgoNetwork {
        EgoNetwork {
            alters: vec![
                alter("pp", &[("gender", text("Other")), ("age", AttrValue::Number(26.0))]),
                alter("cc", &[("gender", text("Male")), ("age", AttrValue::Number(30.0))]),
                alter("sh", &[("gender", text("Female")), ("age", AttrValue::Number(15.0))]),
            ],
            ties: vec![["pp".into(), "cc".into()], ["cc".into(), "sh".into()]],
            awareness: None,
        }
    }

    #[test]
    fn fixture_density_is_two_thirds() {
        assert!((density(&health_fixture()).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn density_edge_cases() {
        let mut n = health_fixture();
        n.ties.clear();
        assert_eq!(density(&n), Some(0.0));
        n.ties = vec![
            ["pp".into(), "cc".into()],
            ["cc".into(), "sh".into()],
            ["sh".into(), "pp".into()],
        ];
        assert_eq!(density(&n), Some(1.0));
        n.alters.truncate(1);
        n.ties.clear();
        assert_eq!(density(&n), None);
    }

    #[test]
    fn proportion_male() {
        let domain = DomainConfig::builtin(DomainId::Health);
        let mut n = health_fixture();
        n.alters[0].attributes.insert("gender".into(), text("Male"));
        n.alters[1].attributes.insert("gender".into(), text("Female"));
        let values = compute_network_composites(&n, &domain);
        assert!((values["Prop. of male alters"].unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(values["Network size"], Some(3.0));
        assert!((values["Mean alter age"].unwrap() - 71.0 / 3.0).abs() < 1e-12);
        // no race attribute anywhere
        assert_eq!(values["Prop. of white alters"], None);
    }

    #[test]
    fn single_alter_network() {
        let domain = DomainConfig::builtin(DomainId::Health);
        let n = EgoNetwork { alters: vec![alter("aa", &[])], ties: vec![], awareness: None };
        let values = compute_network_composites(&n, &domain);
        assert_eq!(values["Network size"], Some(1.0));
        assert_eq!(values["Density"], None);
    }

    #[test]
    fn flagged_scope_for_climate() {
        let domain = DomainConfig::builtin(DomainId::Climate);
        let mut a = alter("pp", &[("relationship", text("Acquaintance")), ("closeness", AttrValue::Number(4.0))]);
        a.flags.insert("climate-discussant".into());
        let b = alter("cc", &[("relationship", text("Family"))]);
        let mut c = alter("sh", &[("relationship", text("Family")), ("closeness", AttrValue::Number(5.0))]);
        c.flags.insert("climate-discussant".into());
        let n = EgoNetwork { alters: vec![a, b, c], ties: vec![], awareness: Some(3) };
        let v = compute_network_composites(&n, &domain);
        assert_eq!(v["Climate network size"], Some(2.0));
        assert!((v["Climate alter prop."].unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(v["Prop. of kin alters"], Some(0.5));
        assert_eq!(v["Mean tie strength"], Some(4.5));
        assert_eq!(v["Mutual awareness"], Some(3.0));
    }

    #[test]
    fn ordinal_attribute_codes() {
        let domain = DomainConfig::builtin(DomainId::Health);
        let a = alter("pp", &[("education", text("Bachelor's Degree"))]);
        assert_eq!(attribute_code(&domain, &a, "education"), Some(5.0));
        let b = alter("cc", &[("education", text("unknown"))]);
        assert_eq!(attribute_code(&domain, &b, "education"), None);
    }
}
