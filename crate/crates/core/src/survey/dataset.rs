use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::domain::{DomainConfig, Outcome};
use super::profile::RespondentProfile;
use super::response::{ResponseRecord, ResponseTable, Source};
use super::{read_csv_rows, Result, SurveyError};

/// Validated profiles plus human responses for one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub domain: DomainConfig,
    pub profiles: Vec<RespondentProfile>,
    pub responses: ResponseTable,
}

#[derive(Debug, Serialize, Deserialize)]
struct HumanRow {
    respondent_id: String,
    claim_id: String,
    outcome: Outcome,
    raw: i64,
}

impl Dataset {
    /// Builds a dataset from in-memory parts, applying the same checks as
    /// [`load_dataset`].
    pub fn from_parts(
        domain: DomainConfig,
        profiles: Vec<RespondentProfile>,
        rows: impl IntoIterator<Item = (String, String, Outcome, i64)>,
    ) -> Result<Self> {
        validate_profiles(&profiles, &domain)?;
        let ids: BTreeSet<&str> = profiles.iter().map(|p| p.id.as_str()).collect();
        let mut records = Vec::new();
        let mut seen = BTreeSet::new();
        for (respondent_id, claim_id, outcome, raw) in rows {
            records.push(human_record(&domain, &ids, &mut seen, respondent_id, &claim_id, outcome, raw)?);
        }
        Ok(Self { domain, profiles, responses: ResponseTable::new(records) })
    }

    pub fn respondent_ids(&self) -> Vec<String> {
        self.profiles.iter().map(|p| p.id.clone()).collect()
    }

    pub fn profile(&self, id: &str) -> Option<&RespondentProfile> {
        self.profiles.iter().find(|p| p.id == id)
    }

    pub fn profiles_jsonl(&self) -> String {
        let mut out = String::new();
        for p in &self.profiles {
            out.push_str(&serde_json::to_string(p).expect("profiles serialize"));
            out.push('\n');
        }
        out
    }

    pub fn responses_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in self.responses.records() {
            w.serialize(HumanRow {
                respondent_id: r.respondent_id.clone(),
                claim_id: r.claim_id.clone(),
                outcome: r.outcome,
                raw: r.raw,
            })
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }

    /// Writes `profiles.jsonl`-style and `responses.csv`-style files.
    pub fn save(&self, profile_path: &Path, responses_path: &Path) -> Result<()> {
        write_file(profile_path, self.profiles_jsonl().as_bytes())?;
        write_file(responses_path, self.responses_csv().as_bytes())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| SurveyError::io(path, e))?;
    f.write_all(bytes).map_err(|e| SurveyError::io(path, e))
}

fn validate_profiles(profiles: &[RespondentProfile], domain: &DomainConfig) -> Result<()> {
    let mut ids = BTreeSet::new();
    for p in profiles {
        if !ids.insert(p.id.as_str()) {
            return Err(SurveyError::Referential(format!("duplicate respondent id {:?}", p.id)));
        }
        p.validate(domain)?;
    }
    Ok(())
}

fn human_record(
    domain: &DomainConfig,
    ids: &BTreeSet<&str>,
    seen: &mut BTreeSet<(String, String, Outcome)>,
    respondent_id: String,
    claim_id: &str,
    outcome: Outcome,
    raw: i64,
) -> Result<ResponseRecord> {
    if !ids.contains(respondent_id.as_str()) {
        return Err(SurveyError::UnknownRespondent(respondent_id));
    }
    let claim = domain.claim(claim_id).ok_or_else(|| SurveyError::UnknownClaim(claim_id.to_string()))?;
    if !seen.insert((respondent_id.clone(), claim_id.to_string(), outcome)) {
        return Err(SurveyError::Referential(format!(
            "duplicate response for ({respondent_id}, {claim_id}, {outcome})"
        )));
    }
    ResponseRecord::new(respondent_id, claim, outcome, Source::Human, raw, domain)
}

fn locate<T>(file: &str, line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        e @ SurveyError::Malformed { .. } => e.in_file(file),
        other => SurveyError::Located { file: file.to_string(), line, source: Box::new(other) },
    })
}

/// Loads profiles (JSON Lines) and human responses (CSV), validating every
/// record against the domain.
pub fn load_dataset(profile_path: &Path, responses_path: &Path, domain: &DomainConfig) -> Result<Dataset> {
    let pfile = profile_path.display().to_string();
    let reader = std::io::BufReader::new(
        std::fs::File::open(profile_path).map_err(|e| SurveyError::io(profile_path, e))?,
    );
    let mut profiles = Vec::new();
    let mut ids = BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| SurveyError::io(profile_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let profile: RespondentProfile = serde_json::from_str(&line).map_err(|e| SurveyError::Malformed {
            file: pfile.clone(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if !ids.insert(profile.id.clone()) {
            return Err(SurveyError::Malformed {
                file: pfile,
                line: i + 1,
                message: format!("duplicate respondent id {:?}", profile.id),
            });
        }
        locate(&pfile, i + 1, profile.validate(domain))?;
        profiles.push(profile);
    }

    let rfile = responses_path.display().to_string();
    let reader = std::io::BufReader::new(
        std::fs::File::open(responses_path).map_err(|e| SurveyError::io(responses_path, e))?,
    );
    let rows = read_csv_rows::<HumanRow, _>(reader).map_err(|e| e.in_file(&rfile))?;
    let id_set: BTreeSet<&str> = profiles.iter().map(|p| p.id.as_str()).collect();
    let mut seen = BTreeSet::new();
    let mut records = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        let rec = human_record(domain, &id_set, &mut seen, row.respondent_id, &row.claim_id, row.outcome, row.raw);
        records.push(locate(&rfile, line, rec)?);
    }
    log::info!(
        "loaded {} respondents and {} response rows for {}",
        profiles.len(),
        records.len(),
        domain.id
    );
    Ok(Dataset { domain: domain.clone(), profiles, responses: ResponseTable::new(records) })
}
