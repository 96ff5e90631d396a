//! Issue and pull-request mining, fix linkage and the offline cache.

mod cache;
mod forge;
mod git;
mod records;
mod resolve;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;

pub use cache::{RepoCache, FIXES_FILE, ISSUES_FILE, PULLS_FILE};
pub use forge::{ForgeClient, DEFAULT_API_URL, MAX_RETRIES};
pub use git::{closing_references, GitRepo, NumStat, TrailerIndex, EMPTY_TREE};
pub use records::*;
pub use resolve::{resolve_fix, FixSources, NO_FIX_FOUND};

#[derive(Debug, thiserror::Error)]
pub enum MinerError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited after {retries} retries (reset: {reset:?})")]
    RateLimited { retries: u32, reset: Option<i64> },
    #[error("network error: {0}")]
    Network(String),
    #[error("unexpected HTTP status {status} for {url}")]
    Http { status: u16, url: String },
    #[error("not a git clone: {}", .0.display())]
    CloneMissing(PathBuf),
    #[error("git {command}: {message}")]
    Git { command: String, message: String },
    #[error("issue {0} has no close timestamp")]
    MissingTimestamp(u64),
    #[error("issue {0} closes before it was created")]
    InvalidTimestamps(u64),
    #[error("offline and no cached {}", .0.display())]
    CacheMissing(PathBuf),
    #[error("corrupt cache {}: {message}", path.display())]
    Cache { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid repository {0:?}, expected owner/name")]
    InvalidRepo(String),
    #[error("override file {}: {message}", path.display())]
    Override { path: PathBuf, message: String },
}

impl MinerError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RepoId {
    pub owner: String,
    pub name: String,
}

impl RepoId {
    pub fn cache_dir_name(&self) -> String {
        format!("{}__{}", self.owner, self.name)
    }

    pub fn from_cache_dir_name(dir: &str) -> Option<Self> {
        let (owner, name) = dir.split_once("__")?;
        format!("{owner}/{name}").parse().ok()
    }
}

impl FromStr for RepoId {
    type Err = MinerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MinerError::InvalidRepo(s.to_string());
        let (owner, name) = s.trim().split_once('/').ok_or_else(bad)?;
        let ok = |p: &str| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
        if !ok(owner) || !ok(name) {
            return Err(bad());
        }
        Ok(Self {
            owner: owner.to_string(),
            name: name.to_string(),
        })
    }
}

impl fmt::Display for RepoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.owner, self.name)
    }
}

/// Any-of over terms, each term an all-of over labels joined with `+`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelFilter {
    terms: Vec<Vec<String>>,
}

impl LabelFilter {
    pub fn parse<S: AsRef<str>>(terms: &[S]) -> Self {
        let terms = terms
            .iter()
            .map(|t| {
                t.as_ref()
                    .split('+')
                    .map(|l| l.trim().to_string())
                    .filter(|l| !l.is_empty())
                    .collect::<Vec<_>>()
            })
            .filter(|t| !t.is_empty())
            .collect();
        Self { terms }
    }

    pub fn terms(&self) -> &[Vec<String>] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// An empty filter places no restriction on labels.
    pub fn matches(&self, issue: &IssueRecord) -> bool {
        self.terms.is_empty() || self.terms.iter().any(|t| t.iter().all(|l| issue.has_label(l)))
    }
}

#[derive(Debug, Clone, Default)]
pub struct FetchOptions {
    pub labels: LabelFilter,
    /// Inclusive lower bound on the creation date.
    pub since: Option<NaiveDate>,
    /// Inclusive upper bound on the creation date.
    pub until: Option<NaiveDate>,
    pub offline: bool,
    /// Ignore a warm cache and fetch again.
    pub refresh: bool,
}

fn in_window(issue: &IssueRecord, opts: &FetchOptions) -> bool {
    let day = issue.created_at.date_naive();
    issue.state == IssueState::Closed && opts.since.is_none_or(|s| day >= s) && opts.until.is_none_or(|u| day <= u)
}

/// Closed issues matching the label filter and creation window, sorted by
/// number. A warm cache is used without touching the network.
pub fn fetch_issues(
    forge: &ForgeClient,
    cache: &RepoCache,
    repo: &RepoId,
    opts: &FetchOptions,
) -> Result<Vec<IssueRecord>, MinerError> {
    let all = if cache.has(ISSUES_FILE) && !opts.refresh {
        cache.read_issues()?
    } else if opts.offline {
        return Err(MinerError::CacheMissing(cache.dir().join(ISSUES_FILE)));
    } else {
        let mut by_number = BTreeMap::new();
        let unrestricted = [Vec::new()];
        let terms = if opts.labels.is_empty() {
            &unrestricted[..]
        } else {
            opts.labels.terms()
        };
        for term in terms {
            for issue in forge.list_closed_issues(repo, term, opts.since)? {
                by_number.insert(issue.number, issue);
            }
        }
        let fetched: Vec<IssueRecord> = by_number.into_values().collect();
        cache.write_issues(&fetched)?;
        fetched
    };
    Ok(all
        .into_iter()
        .filter(|i| opts.labels.matches(i) && in_window(i, opts))
        .collect())
}

/// Pull requests linked from `issues`, merging newly fetched ones into the cache.
pub fn fetch_pulls(
    forge: &ForgeClient,
    cache: &RepoCache,
    repo: &RepoId,
    issues: &[IssueRecord],
    opts: &FetchOptions,
) -> Result<BTreeMap<u64, PullRequestRecord>, MinerError> {
    let mut known: BTreeMap<u64, PullRequestRecord> = if cache.has(PULLS_FILE) && !opts.refresh {
        cache.read_pulls()?.into_iter().map(|p| (p.number, p)).collect()
    } else {
        BTreeMap::new()
    };
    let wanted: BTreeSet<u64> = issues.iter().flat_map(|i| i.linked_prs.iter().copied()).collect();
    let missing: Vec<u64> = wanted.iter().copied().filter(|n| !known.contains_key(n)).collect();
    if !missing.is_empty() {
        if opts.offline {
            if !cache.has(PULLS_FILE) {
                return Err(MinerError::CacheMissing(cache.dir().join(PULLS_FILE)));
            }
            log::warn!("offline: {} linked pull requests are not cached", missing.len());
        } else {
            for n in missing {
                known.insert(n, forge.get_pull(repo, n)?);
            }
            let all: Vec<_> = known.values().cloned().collect();
            cache.write_pulls(&all)?;
        }
    } else if !cache.has(PULLS_FILE) {
        cache.write_pulls(&[])?;
    }
    Ok(known)
}

/// Reads an override file mapping issue numbers to fix commit ids.
pub fn load_overrides(path: &Path) -> Result<BTreeMap<u64, Vec<String>>, MinerError> {
    let text = std::fs::read_to_string(path).map_err(|e| MinerError::io(path, e))?;
    let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(&text).map_err(|e| MinerError::Override {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    raw.into_iter()
        .map(|(k, v)| {
            k.trim_start_matches('#')
                .parse::<u64>()
                .map(|n| (n, v))
                .map_err(|_| MinerError::Override {
                    path: path.to_path_buf(),
                    message: format!("bad issue number {k:?}"),
                })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum BotPolicy {
    #[default]
    Count,
    Exclude,
}

/// Issue comments plus messages on the fix's pull requests; opening
/// descriptions are never counted.
pub fn message_count(
    issue: &IssueRecord,
    fix: &FixRecord,
    pulls: &BTreeMap<u64, PullRequestRecord>,
    bots: BotPolicy,
) -> u32 {
    let count = |total: u32, bot: u32| match bots {
        BotPolicy::Count => total,
        BotPolicy::Exclude => total.saturating_sub(bot),
    };
    let mut n = count(issue.comment_count, issue.bot_comment_count);
    if let FixSource::PullRequests { ids } = &fix.source {
        for pr in ids.iter().filter_map(|id| pulls.get(id)) {
            n += count(pr.message_count, pr.bot_message_count);
        }
    }
    n
}

/// Fractional days from creation to close.
pub fn days_to_close(issue: &IssueRecord) -> Result<f64, MinerError> {
    let closed = issue.closed_at.ok_or(MinerError::MissingTimestamp(issue.number))?;
    let ms = (closed - issue.created_at).num_milliseconds();
    if ms < 0 {
        return Err(MinerError::InvalidTimestamps(issue.number));
    }
    Ok(ms as f64 / 86_400_000.0)
}
