//! Elastic Net diagnostics: coordinate-descent fits, nested cross-validated
//! R², block removal, and the pooled simulation-interaction model.

mod blocks;
mod cv;
mod enet;
mod folds;
mod interaction;
mod rho;
mod standardize;

pub use blocks::{block_removal, BlockRemovalReport, BlockRetention};
pub use cv::{cv_r2, cv_r2_grouped, CvReport, Selection};
pub use enet::{enet_fit, predict, FitConfig, FitResult, GramProblem};
pub use folds::{assign_folds, dense_groups, group_ids, grouped_folds};
pub use interaction::{pooled_interaction, rank_terms, InteractionReport, RankedTerm};
pub use rho::{averaged_susceptibility, belief_sharing_rho};
pub use standardize::{standardize, Standardizer};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LensError {
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("{rows} design rows but {outcomes} outcomes")]
    LengthMismatch { rows: usize, outcomes: usize },
    #[error("schema mismatch: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, LensError>;
