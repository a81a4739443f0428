use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Pending,
    Trained,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub model_id: String,
    pub status: RunStatus,
    /// Relative to the sweep directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    #[serde(default)]
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Append-only JSON-lines run log; the last line for a model is its current state.
#[derive(Debug)]
pub struct RunLedger {
    path: PathBuf,
    latest: BTreeMap<String, LedgerEntry>,
    file: Mutex<File>,
}

impl RunLedger {
    pub fn open(path: &Path) -> Result<Self> {
        let mut latest = BTreeMap::new();
        if path.exists() {
            for (i, line) in fs::read_to_string(path)?.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let e: LedgerEntry = serde_json::from_str(line).map_err(|err| Error::Schema {
                    location: format!("{} line {}", path.display(), i + 1),
                    message: err.to_string(),
                })?;
                latest.insert(e.model_id.clone(), e);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { path: path.to_path_buf(), latest, file: Mutex::new(file) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn latest(&self, model_id: &str) -> Option<&LedgerEntry> {
        self.latest.get(model_id)
    }

    pub fn entries(&self) -> impl Iterator<Item = &LedgerEntry> {
        self.latest.values()
    }

    /// Appends a line. Safe to call from several workers; the in-memory view is
    /// updated by [`RunLedger::record`].
    pub fn append(&self, entry: &LedgerEntry) -> Result<()> {
        let mut line = serde_json::to_string(entry)?;
        line.push('\n');
        let mut f = self.file.lock().expect("ledger lock poisoned");
        f.write_all(line.as_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn record(&mut self, entry: LedgerEntry) {
        self.latest.insert(entry.model_id.clone(), entry);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, status: RunStatus) -> LedgerEntry {
        LedgerEntry { model_id: id.into(), status, checkpoint: None, digest: None, wall_time_s: 0.5, error: None }
    }

    #[test]
    fn latest_line_wins_after_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        {
            let l = RunLedger::open(&path).unwrap();
            l.append(&entry("a", RunStatus::Failed)).unwrap();
            l.append(&entry("a", RunStatus::Trained)).unwrap();
            l.append(&entry("b", RunStatus::Pending)).unwrap();
        }
        let l = RunLedger::open(&path).unwrap();
        assert_eq!(l.latest("a").unwrap().status, RunStatus::Trained);
        assert_eq!(l.entries().count(), 2);
        assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 3);
    }

    #[test]
    fn corrupt_line_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        fs::write(&path, "{not json}\n").unwrap();
        assert!(matches!(RunLedger::open(&path), Err(Error::Schema { .. })));
    }
}
