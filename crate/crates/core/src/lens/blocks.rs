use ndarray::ArrayView1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{cv_r2, CvReport};
use super::enet::FitConfig;
use super::Result;
use crate::survey::{Block, DesignMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRetention {
    pub block: Block,
    pub removed_columns: usize,
    pub r2_removed: Option<f64>,
    /// `100 · R²_removed / R²_full`; absent when R²_full ≤ 0.
    pub retained_pct: Option<f64>,
    pub cv: CvReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRemovalReport {
    pub r2_full: Option<f64>,
    pub full: CvReport,
    pub blocks: Vec<BlockRetention>,
}

/// Refits the cross-validated model once per block with that block's
/// columns dropped.
pub fn block_removal(x: &DesignMatrix, y: ArrayView1<f64>, cfg: &FitConfig) -> Result<BlockRemovalReport> {
    let full = cv_r2(x.values.view(), y, cfg)?;
    let r2_full = full.mean_r2;
    if r2_full.is_some_and(|r| r <= 0.0) {
        log::warn!("full-model R² is not positive; retention ratios suppressed");
    }
    let blocks = Block::ALL
        .par_iter()
        .map(|&block| {
            let removed_columns = x.block_columns(block).len();
            let cv = if removed_columns == 0 {
                full.clone()
            } else {
                cv_r2(x.without_block(block).values.view(), y, cfg)?
            };
            let r2_removed = cv.mean_r2;
            let retained_pct = match (r2_full, r2_removed) {
                (Some(f), Some(r)) if f > 0.0 => Some(100.0 * r / f),
                _ => None,
            };
            Ok(BlockRetention { block, removed_columns, r2_removed, retained_pct, cv })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockRemovalReport { r2_full, full, blocks })
}
