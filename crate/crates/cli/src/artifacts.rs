use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Error;

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String, Error> {
    Ok(sha256_hex(&std::fs::read(path).map_err(|e| Error::Io(path.to_path_buf(), e))?))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(dir.to_path_buf(), e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::Io(path.to_path_buf(), e))
}

/// CSV body preceded by a `# run_id=` comment line.
pub fn csv_string<T: Serialize>(run_id: &str, rows: &[T], header: &[&str]) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(header).map_err(|e| Error::Csv(e.to_string()))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| Error::Csv(e.to_string()))?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Error::Csv(e.to_string()))?).expect("csv is utf-8");
    Ok(format!("# run_id={run_id}\n{body}"))
}

/// Drops leading `#` comment lines.
pub fn strip_comments(text: &str) -> &str {
    let mut rest = text;
    while rest.starts_with('#') {
        rest = rest.split_once('\n').map_or("", |(_, r)| r);
    }
    rest
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(path.to_path_buf(), e))?;
    let mut r = csv::Reader::from_reader(strip_comments(&text).as_bytes());
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(|e| Error::Csv(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub respondents: usize,
    pub records: usize,
    pub profiles_sha256: String,
    pub responses_sha256: String,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub status: String,
    /// Output-relative path → sha256.
    pub artifacts: BTreeMap<String, String>,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub tool_version: String,
    pub config_sha256: String,
    pub datasets: BTreeMap<String, DatasetEntry>,
    pub inputs: BTreeMap<String, String>,
    pub models: Vec<String>,
    pub annotators: Vec<String>,
    pub seeds: BTreeMap<String, u64>,
    pub settings: BTreeMap<String, String>,
    pub steps: BTreeMap<String, StepRecord>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn load(out: &Path) -> Option<Self> {
        let text = std::fs::read_to_string(out.join(MANIFEST)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn save(&self, out: &Path) -> Result<(), Error> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_bytes(&out.join(MANIFEST), (json + "\n").as_bytes())
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        let w = w.into();
        log::warn!("{w}");
        if !self.warnings.contains(&w) {
            self.warnings.push(w);
        }
    }

    /// Artifacts of a completed step whose on-disk hashes all still match;
    /// `Err` names the first mismatching file.
    pub fn verified(&self, out: &Path, step: &str) -> Option<Result<(), String>> {
        let rec = self.steps.get(step).filter(|r| r.status == "completed")?;
        for (rel, sha) in &rec.artifacts {
            match file_sha256(&out.join(rel)) {
                Ok(h) if &h == sha => {}
                _ => return Some(Err(rel.clone())),
            }
        }
        Some(Ok(()))
    }
}

/// Collects artifacts written by one step.
pub struct StepWriter<'a> {
    pub out: &'a Path,
    pub run_id: &'a str,
    pub artifacts: BTreeMap<String, String>,
}

impl<'a> StepWriter<'a> {
    pub fn new(out: &'a Path, run_id: &'a str) -> Self {
        Self { out, run_id, artifacts: BTreeMap::new() }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    pub fn bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<(), Error> {
        write_bytes(&self.out.join(rel), bytes)?;
        self.artifacts.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn csv<T: Serialize>(&mut self, rel: &str, rows: &[T], header: &[&str]) -> Result<(), Error> {
        let text = csv_string(self.run_id, rows, header)?;
        self.bytes(rel, text.as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), Error> {
        let text = serde_json::to_string_pretty(value).expect("artifact serializes") + "\n";
        self.bytes(rel, text.as_bytes())
    }

    pub fn finish(self) -> StepRecord {
        StepRecord { status: "completed".into(), artifacts: self.artifacts, notes: Vec::new() }
    }
}
