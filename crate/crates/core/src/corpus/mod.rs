//! The annotated bug dataset: classes, impacts, locations and file filtering.

mod annotations;
mod filter;
mod ipmap;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Datelike, Utc};
use serde::{Deserialize, Serialize};

pub use annotations::{
    load_annotations, parse_annotations, Annotation, Annotations, BugClass, Impact, ImpactSet, ANNOTATION_COLUMNS,
};
pub use filter::{filter_design_files, DesignFilter, DesignFilterConfig};
pub use ipmap::{IpCategory, IpCategoryMap, OTHER};

use crate::miner::{self, BotPolicy, FixRecord, IssueRecord, PullRequestRecord};

pub const DEFAULT_MAX_FILES: usize = 40;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("annotation schema: {0}")]
    Schema(String),
    #[error("conflicting annotations for issue {issue} (line {line})")]
    Conflict { issue: u64, line: usize },
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BugRecord {
    pub issue: u64,
    pub class: BugClass,
    pub impacts: ImpactSet,
    /// Year of issue creation, UTC.
    pub year: i32,
    pub created_at: DateTime<Utc>,
    pub closed_at: DateTime<Utc>,
    /// Categories of the IP blocks the fix modified, in display order.
    pub locations: Vec<IpCategory>,
    pub fix: FixRecord,
    pub annotation_note: String,
    pub days_to_close: f64,
    pub messages: u32,
}

impl BugRecord {
    pub fn files_changed(&self) -> usize {
        self.fix.files.len()
    }

    pub fn footprint(&self) -> u32 {
        self.fix.footprint()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub issue: u64,
    pub stage: String,
    pub reason: String,
}

impl AuditEntry {
    fn new(issue: u64, stage: &str, reason: impl Into<String>) -> Self {
        Self {
            issue,
            stage: stage.to_string(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    /// Retained bugs, by issue number.
    pub bugs: Vec<BugRecord>,
    pub excluded: Vec<AuditEntry>,
    pub warnings: Vec<String>,
}

impl Dataset {
    pub fn count(&self, class: BugClass) -> usize {
        self.bugs.iter().filter(|b| b.class == class).count()
    }
}

pub fn locations_of(fix: &FixRecord, map: &IpCategoryMap) -> Vec<IpCategory> {
    let mut cats: Vec<IpCategory> = fix.files.iter().map(|f| map.categorize_path(&f.path)).collect();
    cats.sort_by_key(|c| (map.order(c), c.clone()));
    cats.dedup();
    cats
}

pub struct DatasetInputs<'a> {
    pub issues: &'a [IssueRecord],
    pub fixes: &'a BTreeMap<u64, FixRecord>,
    pub pulls: &'a BTreeMap<u64, PullRequestRecord>,
    pub annotations: &'a Annotations,
    pub ip_map: &'a IpCategoryMap,
    pub bots: BotPolicy,
}

/// Joins issues, fixes and annotations. Bugs without a fix or annotated as
/// excluded are dropped with an audit entry; unannotated bugs default to
/// functional with a warning.
pub fn build_dataset(inputs: &DatasetInputs<'_>) -> Dataset {
    let mut ds = Dataset {
        warnings: inputs.annotations.warnings.clone(),
        ..Default::default()
    };
    let mut issues: Vec<&IssueRecord> = inputs.issues.iter().collect();
    issues.sort_by_key(|i| i.number);
    issues.dedup_by_key(|i| i.number);
    for issue in issues {
        let n = issue.number;
        let Some(fix) = inputs.fixes.get(&n) else {
            ds.excluded.push(AuditEntry::new(n, "fix", "fix not resolved"));
            continue;
        };
        if fix.excluded {
            let reason = fix.reason.clone().unwrap_or_else(|| miner::NO_FIX_FOUND.to_string());
            ds.excluded.push(AuditEntry::new(n, "fix", reason));
            continue;
        }
        let ann = match inputs.annotations.get(n) {
            Some(a) => a.clone(),
            None => {
                ds.warnings
                    .push(format!("issue {n} has no annotation, counted as functional"));
                Annotation::default()
            }
        };
        if ann.excluded {
            let why = if ann.note.is_empty() {
                "annotated as excluded".to_string()
            } else {
                format!("annotated as excluded: {}", ann.note)
            };
            ds.excluded.push(AuditEntry::new(n, "annotation", why));
            continue;
        }
        let days = match miner::days_to_close(issue) {
            Ok(d) => d,
            Err(e) => {
                ds.excluded.push(AuditEntry::new(n, "timestamps", e.to_string()));
                continue;
            }
        };
        ds.bugs.push(BugRecord {
            issue: n,
            class: ann.class,
            impacts: ann.impacts,
            year: issue.created_at.year(),
            created_at: issue.created_at,
            closed_at: issue.closed_at.unwrap_or(issue.created_at),
            locations: locations_of(fix, inputs.ip_map),
            fix: fix.clone(),
            annotation_note: ann.note,
            days_to_close: days,
            messages: miner::message_count(issue, fix, inputs.pulls, inputs.bots),
        });
    }
    ds
}

/// Drops bugs whose fix changed more than `max_files` design files.
pub fn apply_outlier_exclusion(bugs: Vec<BugRecord>, max_files: usize) -> (Vec<BugRecord>, Vec<AuditEntry>) {
    let mut audit = Vec::new();
    let kept = bugs
        .into_iter()
        .filter(|b| {
            let n = b.files_changed();
            if n > max_files {
                audit.push(AuditEntry::new(
                    b.issue,
                    "outlier",
                    format!("{n} design files changed (limit {max_files})"),
                ));
                false
            } else {
                true
            }
        })
        .collect();
    (kept, audit)
}
