use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Result, StatError};

/// `|a ∩ b| / |a ∪ b|`, with two empty sets counted as identical.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Mean Jaccard over all unordered pairs of the given sets.
pub fn mean_pairwise_jaccard<T: Ord>(sets: &[BTreeSet<T>]) -> Option<f64> {
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            total += jaccard(&sets[i], &sets[j]);
            pairs += 1;
        }
    }
    (pairs > 0).then(|| total / pairs as f64)
}

/// Items × categories table of rater counts; every row sums to the same
/// number of raters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementMatrix {
    counts: Vec<Vec<usize>>,
    raters: usize,
}

impl AgreementMatrix {
    pub fn new(counts: Vec<Vec<usize>>) -> Result<Self> {
        let first = counts
            .first()
            .ok_or_else(|| StatError::InvalidMatrix("no items".into()))?;
        let categories = first.len();
        if categories == 0 {
            return Err(StatError::InvalidMatrix("no categories".into()));
        }
        let raters: usize = first.iter().sum();
        for (i, row) in counts.iter().enumerate() {
            if row.len() != categories {
                return Err(StatError::InvalidMatrix(format!(
                    "item {i} has {} categories, expected {categories}",
                    row.len()
                )));
            }
            let s: usize = row.iter().sum();
            if s != raters {
                return Err(StatError::InvalidMatrix(format!(
                    "item {i} has {s} ratings, expected {raters}"
                )));
            }
        }
        Ok(Self { counts, raters })
    }

    /// Builds the count table from per-item label lists (one label per rater).
    /// `categories` fixes the column order; labels outside it are rejected.
    pub fn from_labels<L: PartialEq + std::fmt::Debug>(
        items: &[Vec<L>],
        categories: &[L],
    ) -> Result<Self> {
        let mut counts = Vec::with_capacity(items.len());
        for votes in items {
            let mut row = vec![0usize; categories.len()];
            for v in votes {
                let idx = categories
                    .iter()
                    .position(|c| c == v)
                    .ok_or_else(|| StatError::InvalidMatrix(format!("unknown category {v:?}")))?;
                row[idx] += 1;
            }
            counts.push(row);
        }
        Self::new(counts)
    }

    pub fn items(&self) -> usize {
        self.counts.len()
    }

    pub fn raters(&self) -> usize {
        self.raters
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }
}

/// Fleiss' kappa, `(P̄ − P̄ₑ) / (1 − P̄ₑ)`.
pub fn fleiss_kappa(m: &AgreementMatrix) -> Result<f64> {
    let n = m.raters();
    if n < 2 {
        return Err(StatError::TooFewObservations { needed: 2, got: n });
    }
    if m.items() < 2 {
        return Err(StatError::TooFewObservations { needed: 2, got: m.items() });
    }
    let nf = n as f64;
    let items = m.items() as f64;
    let categories = m.counts()[0].len();
    let mut col_totals = vec![0.0; categories];
    let mut p_bar = 0.0;
    for row in m.counts() {
        let sq: f64 = row.iter().map(|&c| (c * c) as f64).sum();
        p_bar += (sq - nf) / (nf * (nf - 1.0));
        for (t, &c) in col_totals.iter_mut().zip(row) {
            *t += c as f64;
        }
    }
    p_bar /= items;
    let p_e: f64 = col_totals
        .iter()
        .map(|t| {
            let p = t / (items * nf);
            p * p
        })
        .sum();
    if (1.0 - p_e).abs() < 1e-15 {
        return Err(StatError::Undefined("chance agreement is 1"));
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard(&set(&["a", "b"]), &set(&["a", "b"])), 1.0);
        assert_eq!(jaccard(&set(&["a"]), &set(&["b"])), 0.0);
        assert_eq!(jaccard(&set(&["a", "b", "c"]), &set(&["b", "c", "d"])), 0.5);
        assert_eq!(jaccard::<String>(&set(&[]), &set(&[])), 1.0);
    }

    #[test]
    fn pairwise_mean() {
        let sets = vec![set(&["a", "b"]), set(&["a", "b"]), set(&["a", "c"])];
        let got = mean_pairwise_jaccard(&sets).unwrap();
        assert!((got - (1.0 + 1.0 / 3.0 + 1.0 / 3.0) / 3.0).abs() < 1e-12);
        assert_eq!(mean_pairwise_jaccard(&[set(&["a"])]), None);
    }

    #[test]
    fn kappa_small_table() {
        // items (A,A,A) and (A,B,B): P̄ = (1 + 1/3)/2, P̄ₑ = (4/6)² + (2/6)²
        let m = AgreementMatrix::from_labels(&[vec!["A", "A", "A"], vec!["A", "B", "B"]], &["A", "B"])
            .unwrap();
        let p_bar = (1.0 + 1.0 / 3.0) / 2.0;
        let p_e = (4.0f64 / 6.0).powi(2) + (2.0f64 / 6.0).powi(2);
        let expected = (p_bar - p_e) / (1.0 - p_e);
        assert!((fleiss_kappa(&m).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.25).abs() < 1e-12);
    }

    #[test]
    fn perfect_agreement_is_one() {
        let m = AgreementMatrix::new(vec![vec![3, 0], vec![0, 3], vec![3, 0]]).unwrap();
        assert!((fleiss_kappa(&m).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_category_is_undefined() {
        let m = AgreementMatrix::new(vec![vec![3, 0], vec![3, 0]]).unwrap();
        assert!(matches!(fleiss_kappa(&m), Err(StatError::Undefined(_))));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(AgreementMatrix::new(vec![vec![3, 0], vec![2, 0]]).is_err());
        assert!(AgreementMatrix::new(vec![]).is_err());
    }
}
