mod support;

use std::collections::BTreeMap;

use bugscope_core::corpus::DesignFilter;
use bugscope_core::miner::{resolve_fix, FixSource, FixSources, GitRepo, RepoId};
use support::synthrepo::{self, lcs_counts};

#[test]
fn file_diffs_match_lcs_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let commits = synthrepo::build(dir.path());
    assert_eq!(commits.len(), 10);
    let git = GitRepo::open(dir.path()).unwrap();
    let repo: RepoId = synthrepo::REPO.parse().unwrap();
    let trailers = git.trailer_index(&repo).unwrap();
    let pulls = BTreeMap::new();
    let overrides = BTreeMap::new();
    let sources = FixSources {
        pulls: &pulls,
        trailers: &trailers,
        overrides: &overrides,
    };
    let filter = DesignFilter::default();
    let mut checked = 0;
    for c in &commits {
        let fix = resolve_fix(&synthrepo::issue(c.issue), &git, sources, &filter).unwrap();
        assert_eq!(
            fix.source,
            FixSource::Commits {
                ids: vec![c.sha.clone()]
            }
        );
        let want: Vec<&String> = c.changes.keys().filter(|p| filter.classify(p).is_some()).collect();
        let got: Vec<&String> = fix.files.iter().map(|f| &f.path).collect();
        assert_eq!(got, want, "issue {}", c.issue);
        for f in &fix.files {
            let (before, after) = &c.changes[&f.path];
            assert_eq!(&f.before_content, before);
            assert_eq!(&f.after_content, after);
            let (added, removed) = lcs_counts(before.as_deref(), after.as_deref());
            assert_eq!(
                (f.lines_added, f.lines_removed),
                (added, removed),
                "{} in issue {}",
                f.path,
                c.issue
            );
            checked += 1;
        }
    }
    assert!(checked >= 10, "only {checked} file diffs checked");
}

#[test]
fn lcs_oracle_known_cases() {
    assert_eq!(lcs_counts(None, Some("a\nb\n")), (2, 0));
    assert_eq!(lcs_counts(Some("a\nb\n"), None), (0, 2));
    assert_eq!(lcs_counts(Some("a\nb\nc\n"), Some("a\nx\nc\n")), (1, 1));
    assert_eq!(lcs_counts(Some("a\nb\n"), Some("b\na\n")), (1, 1));
}
