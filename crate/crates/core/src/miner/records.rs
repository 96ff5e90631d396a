use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IssueState {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssueRecord {
    pub number: u64,
    pub title: String,
    pub labels: Vec<String>,
    pub state: IssueState,
    pub created_at: DateTime<Utc>,
    pub closed_at: Option<DateTime<Utc>>,
    /// Comments after the opening description.
    pub comment_count: u32,
    /// How many of `comment_count` were written by bot accounts.
    #[serde(default)]
    pub bot_comment_count: u32,
    pub linked_prs: Vec<u64>,
    /// Commits recorded by the forge as having closed the issue.
    #[serde(default)]
    pub closing_commits: Vec<String>,
    pub body: String,
}

impl IssueRecord {
    pub fn has_label(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }
}

/// A file touched by a pull request, as reported by the forge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrFile {
    pub path: String,
    pub lines_added: u32,
    pub lines_removed: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullRequestRecord {
    pub number: u64,
    pub merged_at: Option<DateTime<Utc>>,
    /// Discussion comments, review comments and non-empty reviews, without
    /// the opening description.
    pub message_count: u32,
    #[serde(default)]
    pub bot_message_count: u32,
    pub commits: Vec<String>,
    #[serde(default)]
    pub merge_commit: Option<String>,
    pub files: Vec<PrFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDiff {
    pub path: String,
    pub lines_added: u32,
    pub lines_removed: u32,
    pub before_content: Option<String>,
    pub after_content: Option<String>,
    pub generated_flag: bool,
}

impl FileDiff {
    pub fn footprint(&self) -> u32 {
        self.lines_added + self.lines_removed
    }
}

/// Where a fix came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FixSource {
    PullRequests { ids: Vec<u64> },
    Commits { ids: Vec<String> },
    Override { ids: Vec<String> },
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixRecord {
    pub bug_id: u64,
    pub source: FixSource,
    /// Design files only, after filtering.
    pub files: Vec<FileDiff>,
    pub excluded: bool,
    pub reason: Option<String>,
}

impl FixRecord {
    pub fn not_found(bug_id: u64, reason: impl Into<String>) -> Self {
        Self {
            bug_id,
            source: FixSource::None,
            files: Vec::new(),
            excluded: true,
            reason: Some(reason.into()),
        }
    }

    pub fn footprint(&self) -> u32 {
        self.files.iter().map(FileDiff::footprint).sum()
    }
}
