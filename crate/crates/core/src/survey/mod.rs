//! Survey data model: domains, scales, profiles, responses, network
//! composites and regression design matrices.

mod dataset;
mod design;
pub mod domain;
pub mod network;
pub mod profile;
pub mod response;
pub mod scale;

use std::path::{Path, PathBuf};

pub use dataset::{load_dataset, Dataset};
pub use design::{build_design_matrix, ColumnMeta, DesignMatrix};
pub use domain::{
    AlterAttribute, Block, ClaimItem, CompositeKind, CompositeSpec, ConstructDef, DomainConfig, DomainId,
    FeatureSource, FeatureSpec, Outcome,
};
pub use network::{compute_network_composites, density, CompositeValues};
pub use profile::{
    format_number, Alter, AttitudeConstruct, AttitudeItem, AttrValue, DemographicField, EgoNetwork,
    RespondentProfile,
};
pub use response::{
    respondent_susceptibility, ModelMode, PromptFormat, ResponseRecord, ResponseTable, Source,
    SusceptibilityScore,
};
pub use scale::{normalize_response, ScaleSpec};

#[derive(Debug, thiserror::Error)]
pub enum SurveyError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{file} line {line}: {message}")]
    Malformed { file: String, line: usize, message: String },
    #[error("unknown claim id {0:?}")]
    UnknownClaim(String),
    #[error("response references unknown respondent {0:?}")]
    UnknownRespondent(String),
    #[error("raw response {raw} outside scale bounds [{min}, {max}]")]
    OutOfScale { raw: i64, min: i64, max: i64 },
    #[error("referential error: {0}")]
    Referential(String),
    #[error("{0}")]
    Schema(String),
    #[error("profile belongs to domain {found}, expected {expected}")]
    DomainMismatch { expected: DomainId, found: DomainId },
    #[error("csv: {0}")]
    Csv(String),
    #[error("{file} line {line}: {source}")]
    Located { file: String, line: usize, source: Box<SurveyError> },
}

impl SurveyError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        SurveyError::Io { path: path.to_path_buf(), source }
    }

    /// The underlying error with any file/line location stripped.
    pub fn root(&self) -> &SurveyError {
        match self {
            SurveyError::Located { source, .. } => source.root(),
            other => other,
        }
    }

    /// Prefixes a located error with the file name it came from.
    fn in_file(self, file: &str) -> Self {
        match self {
            SurveyError::Malformed { line, message, .. } => {
                SurveyError::Malformed { file: file.to_string(), line, message }
            }
            other => other,
        }
    }
}

impl PartialEq for SurveyError {
    fn eq(&self, other: &Self) -> bool {
        self.to_string() == other.to_string()
    }
}

pub type Result<T> = std::result::Result<T, SurveyError>;

/// Deserializes CSV rows, skipping `#` comment lines, and pairs each row
/// with its 1-based line number in the file.
pub(crate) fn read_csv_rows<T, R>(reader: R) -> Result<Vec<(usize, T)>>
where
    T: serde::de::DeserializeOwned,
    R: std::io::Read,
{
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| SurveyError::Malformed { file: String::new(), line: 1, message: e.to_string() })?
        .clone();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| SurveyError::Malformed {
            file: String::new(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row = record
            .deserialize(Some(&headers))
            .map_err(|e| SurveyError::Malformed { file: String::new(), line, message: e.to_string() })?;
        rows.push((line, row));
    }
    Ok(rows)
}
