//! Offline JSON Lines cache, one directory per repository.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{FixRecord, IssueRecord, MinerError, PullRequestRecord, RepoId};

pub const ISSUES_FILE: &str = "issues.jsonl";
pub const PULLS_FILE: &str = "pulls.jsonl";
pub const FIXES_FILE: &str = "fixes.jsonl";

#[derive(Debug, Clone)]
pub struct RepoCache {
    dir: PathBuf,
}

impl RepoCache {
    pub fn new(root: impl AsRef<Path>, repo: &RepoId) -> Self {
        Self {
            dir: root.as_ref().join(repo.cache_dir_name()),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn has(&self, file: &str) -> bool {
        self.dir.join(file).is_file()
    }

    pub fn read_issues(&self) -> Result<Vec<IssueRecord>, MinerError> {
        self.read(ISSUES_FILE)
    }

    pub fn write_issues(&self, records: &[IssueRecord]) -> Result<(), MinerError> {
        self.write(ISSUES_FILE, records)
    }

    pub fn read_pulls(&self) -> Result<Vec<PullRequestRecord>, MinerError> {
        self.read(PULLS_FILE)
    }

    pub fn write_pulls(&self, records: &[PullRequestRecord]) -> Result<(), MinerError> {
        self.write(PULLS_FILE, records)
    }

    pub fn read_fixes(&self) -> Result<Vec<FixRecord>, MinerError> {
        self.read(FIXES_FILE)
    }

    pub fn write_fixes(&self, records: &[FixRecord]) -> Result<(), MinerError> {
        self.write(FIXES_FILE, records)
    }

    fn read<T: DeserializeOwned>(&self, file: &str) -> Result<Vec<T>, MinerError> {
        let path = self.dir.join(file);
        let reader = BufReader::new(fs::File::open(&path).map_err(|e| MinerError::io(&path, e))?);
        let mut out = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| MinerError::io(&path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record = serde_json::from_str(&line).map_err(|e| MinerError::Cache {
                path: path.clone(),
                message: format!("line {}: {e}", idx + 1),
            })?;
            out.push(record);
        }
        Ok(out)
    }

    /// Writes via a temporary file in the same directory, then renames.
    fn write<T: Serialize>(&self, file: &str, records: &[T]) -> Result<(), MinerError> {
        fs::create_dir_all(&self.dir).map_err(|e| MinerError::io(&self.dir, e))?;
        let path = self.dir.join(file);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| MinerError::io(&self.dir, e))?;
        for record in records {
            let line = serde_json::to_string(record).map_err(|e| MinerError::Cache {
                path: path.clone(),
                message: e.to_string(),
            })?;
            writeln!(tmp, "{line}").map_err(|e| MinerError::io(&path, e))?;
        }
        tmp.flush().map_err(|e| MinerError::io(&path, e))?;
        tmp.persist(&path).map_err(|e| MinerError::io(&path, e.error))?;
        Ok(())
    }
}
