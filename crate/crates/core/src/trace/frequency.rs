use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::extract::RetainedSet;
use super::variables::VariableRoster;
use crate::survey::DomainId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableCount {
    pub variable: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainFrequency {
    pub domain: DomainId,
    pub chains: usize,
    /// Every roster variable, most frequent first, ties by name.
    pub counts: Vec<VariableCount>,
    pub top: Vec<VariableCount>,
}

pub fn reasoning_frequency(retained: &[RetainedSet], roster: &VariableRoster, k: usize) -> Vec<DomainFrequency> {
    let mut by_domain: BTreeMap<DomainId, (usize, BTreeMap<String, usize>)> = BTreeMap::new();
    for r in retained {
        let entry = by_domain
            .entry(r.domain)
            .or_insert_with(|| (0, roster.names().into_iter().map(|n| (n, 0)).collect()));
        entry.0 += 1;
        for v in &r.variables {
            *entry.1.entry(v.clone()).or_default() += 1;
        }
    }
    by_domain
        .into_iter()
        .map(|(domain, (chains, counts))| {
            let mut counts: Vec<VariableCount> =
                counts.into_iter().map(|(variable, count)| VariableCount { variable, count }).collect();
            counts.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.variable.cmp(&b.variable)));
            let top = counts.iter().take(k).cloned().collect();
            DomainFrequency { domain, chains, counts, top }
        })
        .collect()
}
