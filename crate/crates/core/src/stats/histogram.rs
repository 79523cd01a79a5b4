use serde::{Deserialize, Serialize};

use super::{Result, StatError};

/// Equal-width histogram on `[0, 1]`, normalized to probabilities.
///
/// Bins are left-closed except the last one, which also holds `1.0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitHistogram {
    probabilities: Vec<f64>,
}

impl UnitHistogram {
    pub fn from_values(values: &[f64], bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(StatError::TooFewBins(bins));
        }
        if values.is_empty() {
            return Err(StatError::EmptySample);
        }
        let mut counts = vec![0usize; bins];
        for &v in values {
            if !(0.0..=1.0).contains(&v) {
                return Err(StatError::OutOfUnitRange(v));
            }
            let idx = ((v * bins as f64).floor() as usize).min(bins - 1);
            counts[idx] += 1;
        }
        let n = values.len() as f64;
        Ok(Self {
            probabilities: counts.into_iter().map(|c| c as f64 / n).collect(),
        })
    }

    /// Builds a histogram from explicit probabilities, renormalizing to sum 1.
    pub fn from_probabilities(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() < 2 {
            return Err(StatError::TooFewBins(probabilities.len()));
        }
        let total: f64 = probabilities.iter().sum();
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) || total <= 0.0 {
            return Err(StatError::Undefined("probabilities must be nonnegative with positive mass"));
        }
        Ok(Self {
            probabilities: probabilities.into_iter().map(|p| p / total).collect(),
        })
    }

    pub fn bin_count(&self) -> usize {
        self.probabilities.len()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn bin_width(&self) -> f64 {
        1.0 / self.bin_count() as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let w = self.bin_width();
        (0..self.bin_count()).map(|i| (i as f64 + 0.5) * w).collect()
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.bin_count() != other.bin_count() {
            return Err(StatError::BinMismatch(self.bin_count(), other.bin_count()));
        }
        Ok(())
    }
}
