use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded shuffle of `n_units` followed by a split into `k` contiguous
/// blocks. Returns the fold index of every unit.
pub fn assign_folds(n_units: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n_units).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut fold = vec![0; n_units];
    for (pos, &unit) in order.iter().enumerate() {
        fold[unit] = pos * k / n_units.max(1);
    }
    fold
}

/// Dense group ids for row labels, numbered in sorted label order so that
/// the numbering does not depend on row order.
pub fn group_ids<S: AsRef<str>>(labels: &[S]) -> (Vec<usize>, usize) {
    let mut index: BTreeMap<&str, usize> = labels.iter().map(|l| (l.as_ref(), 0)).collect();
    for (i, v) in index.values_mut().enumerate() {
        *v = i;
    }
    let count = index.len();
    (labels.iter().map(|l| index[l.as_ref()]).collect(), count)
}

/// Renumbers arbitrary group ids densely in ascending id order.
pub fn dense_groups(groups: &[usize]) -> (Vec<usize>, usize) {
    let mut index: BTreeMap<usize, usize> = groups.iter().map(|&g| (g, 0)).collect();
    for (i, v) in index.values_mut().enumerate() {
        *v = i;
    }
    (groups.iter().map(|g| index[g]).collect(), index.len())
}

/// Row-level folds where every row of a group lands in the same fold.
pub fn grouped_folds(groups: &[usize], n_groups: usize, k: usize, seed: u64) -> Vec<usize> {
    let per_group = assign_folds(n_groups, k, seed);
    groups.iter().map(|&g| per_group[g]).collect()
}

pub(crate) fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
