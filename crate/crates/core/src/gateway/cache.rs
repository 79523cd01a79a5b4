use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{CompletionResult, CompletionStatus, GatewayError, RequestKey, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub request_key: RequestKey,
    pub result: CompletionResult,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub prompt_hash: String,
}

impl CacheRecord {
    pub fn new(result: CompletionResult, prompt_hash: String) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self { request_key: result.request_key.clone(), result, timestamp, prompt_hash }
    }
}

/// Append-only JSONL store of completion records. The latest record for a
/// key wins on replay.
#[derive(Debug, Default)]
pub struct ResponseCache {
    path: Option<PathBuf>,
    file: Option<File>,
    entries: BTreeMap<RequestKey, CacheRecord>,
    appended: usize,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (creating if needed) and replays the cache file.
    pub fn open(path: &Path) -> Result<Self> {
        let io_err = |e| GatewayError::Io { path: path.display().to_string(), source: e };
        let mut entries = BTreeMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(io_err)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(io_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CacheRecord = serde_json::from_str(&line)
                    .map_err(|e| GatewayError::CacheRecord { line: i + 1, message: e.to_string() })?;
                entries.insert(rec.request_key.clone(), rec);
            }
        }
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir).map_err(io_err)?;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io_err)?;
        Ok(Self { path: Some(path.to_path_buf()), file: Some(file), entries, appended: 0 })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Records appended since this cache was opened.
    pub fn appended(&self) -> usize {
        self.appended
    }

    pub fn get(&self, key: &RequestKey) -> Option<&CacheRecord> {
        self.entries.get(key)
    }

    /// A terminal-ok result bound to exactly this prompt.
    pub fn lookup_ok(&self, key: &RequestKey, prompt_hash: &str) -> Option<&CompletionResult> {
        self.entries
            .get(key)
            .filter(|r| r.prompt_hash == prompt_hash && r.result.status == CompletionStatus::Ok)
            .map(|r| &r.result)
    }

    pub fn append(&mut self, record: CacheRecord) -> Result<()> {
        if let Some(f) = &mut self.file {
            let mut line = serde_json::to_string(&record).expect("cache records serialize");
            line.push('\n');
            f.write_all(line.as_bytes())
                .and_then(|_| f.flush())
                .map_err(|e| GatewayError::Io {
                    path: self.path.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
                    source: e,
                })?;
        }
        self.appended += 1;
        self.entries.insert(record.request_key.clone(), record);
        Ok(())
    }

    pub fn records(&self) -> impl Iterator<Item = &CacheRecord> {
        self.entries.values()
    }
}
