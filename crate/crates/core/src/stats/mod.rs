//! Scalar statistics used by the divergence and agreement analyses.
//!
//! Everything here is pure and deterministic: unit-interval histograms,
//! Jensen–Shannon divergence (base 2), 1-D earth mover's distance, Spearman
//! rank correlation with midranks, Jaccard similarity and Fleiss' kappa.

mod agreement;
mod divergence;
mod histogram;
mod rank;

pub use agreement::{fleiss_kappa, jaccard, mean_pairwise_jaccard, AgreementMatrix};
pub use divergence::{emd1d, jsd, wasserstein1_samples};
pub use histogram::UnitHistogram;
pub use rank::{midranks, pearson, spearman};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatError {
    #[error("histogram needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("cannot build a histogram from an empty sample")]
    EmptySample,
    #[error("value {0} lies outside the unit interval")]
    OutOfUnitRange(f64),
    #[error("bin count mismatch: {0} vs {1}")]
    BinMismatch(usize, usize),
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("statistic undefined: {0}")]
    Undefined(&'static str),
    #[error("agreement matrix: {0}")]
    InvalidMatrix(String),
}

pub type Result<T> = std::result::Result<T, StatError>;
