use crate::stats::{spearman, StatError};
use crate::survey::{ClaimItem, Outcome, ResponseTable, Source};

/// Respondent-level susceptibility averaged over `sources` (the models of
/// one prompting format). A respondent with no source covering every claim
/// gets `None`.
pub fn averaged_susceptibility(
    table: &ResponseTable,
    respondents: &[String],
    claims: &[ClaimItem],
    outcome: Outcome,
    sources: &[Source],
) -> Vec<Option<f64>> {
    let mut sums = vec![(0.0, 0usize); respondents.len()];
    for source in sources {
        for (i, s) in table.susceptibility(respondents, claims, outcome, source).iter().enumerate() {
            if let Some(v) = s.value {
                sums[i].0 += v;
                sums[i].1 += 1;
            }
        }
    }
    sums.into_iter().map(|(s, c)| (c > 0).then(|| s / c as f64)).collect()
}

/// Spearman ρ between belief and sharing susceptibility over respondents
/// that have both.
pub fn belief_sharing_rho(
    table: &ResponseTable,
    respondents: &[String],
    claims: &[ClaimItem],
    sources: &[Source],
) -> Result<f64, StatError> {
    let belief = averaged_susceptibility(table, respondents, claims, Outcome::Belief, sources);
    let sharing = averaged_susceptibility(table, respondents, claims, Outcome::Sharing, sources);
    let (b, s): (Vec<f64>, Vec<f64>) = belief
        .iter()
        .zip(&sharing)
        .filter_map(|(b, s)| Some(((*b)?, (*s)?)))
        .unzip();
    if b.len() < 3 {
        return Err(StatError::TooFewObservations { needed: 3, got: b.len() });
    }
    spearman(&b, &s)
}
