use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::trace::{RawSpan, VariableRoster};

const PHRASES: [&str; 6] = [
    "Survey evidence suggests that higher {alias} goes with greater belief in {target}.",
    "People reporting more {alias} were less likely to share {target} online.",
    "The report mentions {alias} alongside {target} without drawing a conclusion.",
    "Across several studies, {alias} predicted lower susceptibility to {target}.",
    "Greater {alias} was associated with more sharing of {target} in the sample.",
    "Discussions of {target} often reference {alias} in passing.",
];

const DISTRACTORS: [&str; 3] = [
    "Fact-checkers reviewed a large number of viral posts last year.",
    "Misinformation spreads faster than corrections on many platforms.",
    "The committee discussed the budget for the coming season.",
];

/// Synthetic retrieved spans: `per_variable` matching spans per roster
/// variable, plus distractors and exact duplicates that filtering removes.
pub fn gen_spans(roster: &VariableRoster, per_variable: usize, seed: u64) -> Vec<RawSpan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (vi, v) in roster.variables.iter().enumerate() {
        let count = if vi % 5 == 4 { per_variable.min(3) } else { per_variable };
        for k in 0..count {
            let alias = v.aliases.choose(&mut rng).expect("aliases");
            let target = if rng.random_bool(0.7) { "misinformation" } else { "disinformation" };
            let phrase = PHRASES.choose(&mut rng).expect("phrases");
            let text = format!("{} (source {}-{k})", phrase.replace("{alias}", alias).replace("{target}", target), vi + 1);
            out.push(RawSpan {
                span_id: None,
                text: text.clone(),
                query: None,
                provenance: serde_json::json!({"corpus": "synthetic", "seed": seed}),
            });
            if rng.random_bool(0.1) {
                out.push(RawSpan::new(text));
            }
        }
    }
    for d in DISTRACTORS {
        out.push(RawSpan::new(d));
    }
    out
}
