use std::collections::BTreeMap;

use crate::corpus::DesignFilter;

use super::git::{GitRepo, TrailerIndex};
use super::{FileDiff, FixRecord, FixSource, IssueRecord, MinerError, PullRequestRecord};

pub const NO_FIX_FOUND: &str = "no fix found";

/// Everything besides the clone that fix discovery consults.
#[derive(Debug, Clone, Copy)]
pub struct FixSources<'a> {
    pub pulls: &'a BTreeMap<u64, PullRequestRecord>,
    pub trailers: &'a TrailerIndex,
    /// Manual issue → commit list corrections.
    pub overrides: &'a BTreeMap<u64, Vec<String>>,
}

/// A (base, tip) revision pair.
type ChangeSet = (String, String);

/// Links an issue to its fix and extracts design-file diffs from the clone.
///
/// Discovery tries merged linked pull requests, then commits whose messages
/// close the issue (plus commits the forge recorded as closing it), then the
/// override table. Several change sets are unioned per path: the before
/// version comes from the earliest base and the after version from the latest
/// tip.
pub fn resolve_fix(
    issue: &IssueRecord,
    git: &GitRepo,
    sources: FixSources<'_>,
    filter: &DesignFilter,
) -> Result<FixRecord, MinerError> {
    let (source, sets) = discover(issue, git, sources)?;
    if sets.is_empty() {
        return Ok(FixRecord::not_found(issue.number, NO_FIX_FOUND));
    }
    let files = extract(git, &sets, filter)?;
    Ok(FixRecord {
        bug_id: issue.number,
        source,
        files,
        excluded: false,
        reason: None,
    })
}

fn discover(
    issue: &IssueRecord,
    git: &GitRepo,
    sources: FixSources<'_>,
) -> Result<(FixSource, Vec<ChangeSet>), MinerError> {
    let mut prs: Vec<&PullRequestRecord> = issue
        .linked_prs
        .iter()
        .filter_map(|n| sources.pulls.get(n))
        .filter(|pr| pr.merged_at.is_some())
        .collect();
    prs.sort_by_key(|pr| (pr.merged_at, pr.number));
    let mut ids = Vec::new();
    let mut sets = Vec::new();
    for pr in prs {
        if let Some(set) = pull_change_set(pr, git)? {
            ids.push(pr.number);
            sets.push(set);
        } else {
            log::warn!(
                "issue {}: commits of PR {} are not in the clone",
                issue.number,
                pr.number
            );
        }
    }
    if !sets.is_empty() {
        return Ok((FixSource::PullRequests { ids }, sets));
    }

    let mut commits: Vec<String> = sources.trailers.commits_for(issue.number).to_vec();
    for sha in &issue.closing_commits {
        if !commits.contains(sha) {
            commits.push(sha.clone());
        }
    }
    let (ids, sets) = commit_change_sets(&commits, git)?;
    if !sets.is_empty() {
        return Ok((FixSource::Commits { ids }, sets));
    }

    if let Some(listed) = sources.overrides.get(&issue.number) {
        let (ids, sets) = commit_change_sets(listed, git)?;
        if !sets.is_empty() {
            return Ok((FixSource::Override { ids }, sets));
        }
    }
    Ok((FixSource::None, Vec::new()))
}

/// The PR's own commit range when present in the clone, else its merge commit.
fn pull_change_set(pr: &PullRequestRecord, git: &GitRepo) -> Result<Option<ChangeSet>, MinerError> {
    if let (Some(first), Some(last)) = (pr.commits.first(), pr.commits.last()) {
        if git.has_commit(first) && git.has_commit(last) {
            return Ok(Some((git.first_parent(first)?, last.clone())));
        }
    }
    if let Some(merge) = pr.merge_commit.as_deref().filter(|m| git.has_commit(m)) {
        return Ok(Some((git.first_parent(merge)?, merge.to_string())));
    }
    Ok(None)
}

fn commit_change_sets(commits: &[String], git: &GitRepo) -> Result<(Vec<String>, Vec<ChangeSet>), MinerError> {
    let mut ids = Vec::new();
    let mut sets = Vec::new();
    for sha in commits {
        if git.has_commit(sha) {
            ids.push(sha.clone());
            sets.push((git.first_parent(sha)?, sha.clone()));
        }
    }
    Ok((ids, sets))
}

struct Touched<'a> {
    base: &'a str,
    tip: &'a str,
    sets: usize,
    added: u32,
    removed: u32,
}

fn extract(git: &GitRepo, sets: &[ChangeSet], filter: &DesignFilter) -> Result<Vec<FileDiff>, MinerError> {
    let mut touched: BTreeMap<String, Touched<'_>> = BTreeMap::new();
    for (base, tip) in sets {
        for stat in git.numstat(base, tip)? {
            touched
                .entry(stat.path)
                .and_modify(|t| {
                    t.tip = tip;
                    t.sets += 1;
                })
                .or_insert(Touched {
                    base,
                    tip,
                    sets: 1,
                    added: stat.added,
                    removed: stat.removed,
                });
        }
    }
    let mut files = Vec::new();
    for (path, t) in touched {
        let Some(generated_flag) = filter.classify(&path) else {
            continue;
        };
        let before = git.show(t.base, &path)?;
        let after = git.show(t.tip, &path)?;
        if before == after {
            continue;
        }
        let (lines_added, lines_removed) = if t.sets > 1 {
            git.path_numstat(t.base, t.tip, &path)?
        } else {
            (t.added, t.removed)
        };
        files.push(FileDiff {
            path,
            lines_added,
            lines_removed,
            before_content: before,
            after_content: after,
            generated_flag,
        });
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::miner::git::testrepo::{commit, init};
    use crate::miner::{IssueState, RepoId};
    use chrono::{TimeZone, Utc};

    fn issue(number: u64, linked_prs: Vec<u64>) -> IssueRecord {
        IssueRecord {
            number,
            title: "t".into(),
            labels: vec![],
            state: IssueState::Closed,
            created_at: Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap(),
            closed_at: Some(Utc.with_ymd_and_hms(2021, 1, 2, 0, 0, 0).unwrap()),
            comment_count: 0,
            bot_comment_count: 0,
            linked_prs,
            closing_commits: vec![],
            body: String::new(),
        }
    }

    fn pr(number: u64, commits: Vec<String>, merge: Option<String>, day: u32) -> PullRequestRecord {
        PullRequestRecord {
            number,
            merged_at: Some(Utc.with_ymd_and_hms(2021, 2, day, 0, 0, 0).unwrap()),
            message_count: 0,
            bot_message_count: 0,
            commits,
            merge_commit: merge,
            files: vec![],
        }
    }

    struct Fixture {
        _dir: tempfile::TempDir,
        git: GitRepo,
        shas: Vec<String>,
    }

    fn fixture() -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        init(d);
        let shas = vec![
            commit(
                d,
                &[
                    (
                        "hw/ip/aes/rtl/aes.sv",
                        Some("module aes;\n  assign a = b;\nendmodule\n"),
                    ),
                    ("hw/ip/aes/data/aes.hjson", Some("{}\n")),
                    ("README.md", Some("r\n")),
                ],
                "init",
            ),
            commit(
                d,
                &[
                    (
                        "hw/ip/aes/rtl/aes.sv",
                        Some("module aes;\n  assign a = c;\nendmodule\n"),
                    ),
                    ("hw/ip/aes/data/aes.hjson", Some("{ x: 1 }\n")),
                    ("README.md", Some("r2\n")),
                ],
                "aes: fix\n\nFixes #10",
            ),
            commit(
                d,
                &[("hw/ip/aes/rtl/aes_reg_top.sv", Some("module aes_reg_top;\nendmodule\n"))],
                "regen",
            ),
            commit(
                d,
                &[(
                    "hw/ip/aes/rtl/aes.sv",
                    Some("module aes;\n  assign a = c;\n  assign d = e;\nendmodule\n"),
                )],
                "more",
            ),
            commit(d, &[("doc/x.md", Some("x\n"))], "docs only, closes #12"),
        ];
        let git = GitRepo::open(d).unwrap();
        Fixture { _dir: dir, git, shas }
    }

    fn run(
        f: &Fixture,
        issue: &IssueRecord,
        pulls: &BTreeMap<u64, PullRequestRecord>,
        ov: &BTreeMap<u64, Vec<String>>,
    ) -> FixRecord {
        let repo: RepoId = "o/n".parse().unwrap();
        let trailers = f.git.trailer_index(&repo).unwrap();
        let sources = FixSources {
            pulls,
            trailers: &trailers,
            overrides: ov,
        };
        resolve_fix(issue, &f.git, sources, &DesignFilter::default()).unwrap()
    }

    #[test]
    fn trailer_commit_with_design_filter() {
        let f = fixture();
        let fix = run(&f, &issue(10, vec![]), &BTreeMap::new(), &BTreeMap::new());
        assert_eq!(
            fix.source,
            FixSource::Commits {
                ids: vec![f.shas[1].clone()]
            }
        );
        assert!(!fix.excluded);
        assert_eq!(fix.files.len(), 1);
        let d = &fix.files[0];
        assert_eq!(d.path, "hw/ip/aes/rtl/aes.sv");
        assert_eq!((d.lines_added, d.lines_removed), (1, 1));
        assert!(d.before_content.as_deref().unwrap().contains("= b;"));
        assert!(d.after_content.as_deref().unwrap().contains("= c;"));
    }

    #[test]
    fn merged_pr_range_is_preferred_and_unioned() {
        let f = fixture();
        let mut pulls = BTreeMap::new();
        pulls.insert(5, pr(5, vec![f.shas[2].clone(), f.shas[3].clone()], None, 3));
        pulls.insert(4, pr(4, vec![f.shas[1].clone()], None, 1));
        // Unmerged PRs are ignored.
        let mut open = pr(6, vec![f.shas[4].clone()], None, 1);
        open.merged_at = None;
        pulls.insert(6, open);
        let fix = run(&f, &issue(10, vec![5, 4, 6]), &pulls, &BTreeMap::new());
        assert_eq!(fix.source, FixSource::PullRequests { ids: vec![4, 5] });
        let paths: Vec<_> = fix.files.iter().map(|d| d.path.as_str()).collect();
        assert_eq!(paths, vec!["hw/ip/aes/rtl/aes.sv", "hw/ip/aes/rtl/aes_reg_top.sv"]);
        // Union: before from shas[0], after from shas[3].
        let aes = &fix.files[0];
        assert_eq!((aes.lines_added, aes.lines_removed), (2, 1));
        let reg = &fix.files[1];
        assert!(reg.generated_flag);
        assert_eq!(reg.before_content, None);
        assert_eq!((reg.lines_added, reg.lines_removed), (2, 0));
    }

    #[test]
    fn merge_commit_fallback() {
        let f = fixture();
        let mut pulls = BTreeMap::new();
        pulls.insert(7, pr(7, vec!["deadbeef".into()], Some(f.shas[3].clone()), 1));
        let fix = run(&f, &issue(99, vec![7]), &pulls, &BTreeMap::new());
        assert_eq!(fix.source, FixSource::PullRequests { ids: vec![7] });
        assert_eq!((fix.files[0].lines_added, fix.files[0].lines_removed), (1, 0));
    }

    #[test]
    fn override_and_not_found() {
        let f = fixture();
        let mut ov = BTreeMap::new();
        ov.insert(
            50,
            vec![
                "0000000000000000000000000000000000000000".to_string(),
                f.shas[2].clone(),
            ],
        );
        let fix = run(&f, &issue(50, vec![]), &BTreeMap::new(), &ov);
        assert_eq!(
            fix.source,
            FixSource::Override {
                ids: vec![f.shas[2].clone()]
            }
        );
        let none = run(&f, &issue(51, vec![]), &BTreeMap::new(), &ov);
        assert!(none.excluded);
        assert_eq!(none.reason.as_deref(), Some(NO_FIX_FOUND));
        assert_eq!(none.source, FixSource::None);
    }

    #[test]
    fn docs_only_fix_has_no_design_files() {
        let f = fixture();
        let fix = run(&f, &issue(12, vec![]), &BTreeMap::new(), &BTreeMap::new());
        assert!(!fix.excluded);
        assert!(fix.files.is_empty());
    }

    #[test]
    fn deterministic() {
        let f = fixture();
        let a = run(&f, &issue(10, vec![]), &BTreeMap::new(), &BTreeMap::new());
        let b = run(&f, &issue(10, vec![]), &BTreeMap::new(), &BTreeMap::new());
        assert_eq!(a, b);
    }
}
