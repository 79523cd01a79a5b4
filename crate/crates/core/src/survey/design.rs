use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::domain::{Block, DomainConfig, FeatureSource, FeatureSpec};
use super::network::compute_network_composites;
use super::profile::RespondentProfile;
use super::{Result, SurveyError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub block: Block,
    /// Constant after imputation; kept in the matrix, excluded from fits.
    pub zero_variance: bool,
    /// Number of cells filled with the column mean.
    pub imputed: usize,
}

/// Respondent-by-feature matrix with block-tagged columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub row_ids: Vec<String>,
    pub columns: Vec<ColumnMeta>,
    pub values: Array2<f64>,
}

impl DesignMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn block_columns(&self, block: Block) -> Vec<usize> {
        (0..self.n_cols()).filter(|&j| self.columns[j].block == block).collect()
    }

    pub fn select_columns(&self, keep: &[usize]) -> DesignMatrix {
        DesignMatrix {
            row_ids: self.row_ids.clone(),
            columns: keep.iter().map(|&j| self.columns[j].clone()).collect(),
            values: self.values.select(Axis(1), keep),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> DesignMatrix {
        DesignMatrix {
            row_ids: rows.iter().map(|&i| self.row_ids[i].clone()).collect(),
            columns: self.columns.clone(),
            values: self.values.select(Axis(0), rows),
        }
    }

    pub fn without_block(&self, block: Block) -> DesignMatrix {
        let keep: Vec<usize> = (0..self.n_cols()).filter(|&j| self.columns[j].block != block).collect();
        self.select_columns(&keep)
    }

    pub fn has_same_schema(&self, other: &DesignMatrix) -> bool {
        self.columns.len() == other.columns.len()
            && self.columns.iter().zip(&other.columns).all(|(a, b)| a.name == b.name && a.block == b.block)
    }
}

fn construct_items(profile: &RespondentProfile, construct: &str) -> Option<Vec<f64>> {
    let c = profile.construct(construct)?;
    if c.items.is_empty() {
        return None;
    }
    Some(c.items.iter().map(|i| i.response as f64).collect())
}

fn feature_value(
    spec: &FeatureSpec,
    profile: &RespondentProfile,
    composites: &super::network::CompositeValues,
) -> Option<f64> {
    match &spec.source {
        FeatureSource::Numeric { field } => profile.demographic(field)?.as_f64(),
        FeatureSource::Indicator { field, level } => {
            Some(if profile.demographic(field)?.matches(level) { 1.0 } else { 0.0 })
        }
        FeatureSource::Ordinal { field, levels } => {
            let v = profile.demographic(field)?;
            levels
                .iter()
                .position(|l| v.matches(l))
                .map(|i| (i + 1) as f64)
                .or_else(|| v.as_f64())
        }
        FeatureSource::ConstructMean { construct } => {
            let items = construct_items(profile, construct)?;
            Some(items.iter().sum::<f64>() / items.len() as f64)
        }
        FeatureSource::ConstructIndicator { construct, code } => {
            let items = construct_items(profile, construct)?;
            Some(if items[0] == *code as f64 { 1.0 } else { 0.0 })
        }
        FeatureSource::Network { composite } => composites.get(composite).copied().flatten(),
    }
}

/// Builds the design matrix for the domain's feature schema. Missing cells
/// are filled with the column mean of the observed values.
pub fn build_design_matrix(profiles: &[RespondentProfile], domain: &DomainConfig) -> Result<DesignMatrix> {
    let n = profiles.len();
    let p = domain.features.len();
    let composites: Vec<_> = profiles
        .iter()
        .map(|pr| compute_network_composites(&pr.network, domain))
        .collect();
    let mut values = Array2::<f64>::zeros((n, p));
    let mut columns = Vec::with_capacity(p);
    for (j, spec) in domain.features.iter().enumerate() {
        let raw: Vec<Option<f64>> = profiles
            .iter()
            .zip(&composites)
            .map(|(pr, comp)| feature_value(spec, pr, comp).filter(|v| v.is_finite()))
            .collect();
        let observed: Vec<f64> = raw.iter().flatten().copied().collect();
        if observed.is_empty() {
            return Err(SurveyError::Schema(format!(
                "feature {:?} is absent from all profiles",
                spec.name
            )));
        }
        let mean = observed.iter().sum::<f64>() / observed.len() as f64;
        let mut imputed = 0;
        for (i, v) in raw.iter().enumerate() {
            values[[i, j]] = v.unwrap_or_else(|| {
                imputed += 1;
                mean
            });
        }
        let first = values[[0, j]];
        let zero_variance = values.column(j).iter().all(|v| *v == first);
        if zero_variance {
            log::warn!("feature {:?} is constant across respondents", spec.name);
        }
        columns.push(ColumnMeta { name: spec.name.clone(), block: spec.block, zero_variance, imputed });
    }
    Ok(DesignMatrix { row_ids: profiles.iter().map(|p| p.id.clone()).collect(), columns, values })
}
