//! Read-only access to a local clone through the `git` command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;

use regex::Regex;

use super::{MinerError, RepoId};

/// Object id of the empty tree, used as the base of root commits.
pub const EMPTY_TREE: &str = "4b825dc642cb6eb9a060e54bf8d69288fbee4904";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumStat {
    pub path: String,
    pub added: u32,
    pub removed: u32,
}

#[derive(Debug, Clone)]
pub struct GitRepo {
    path: PathBuf,
}

impl GitRepo {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, MinerError> {
        let path = path.as_ref().to_path_buf();
        let missing = || MinerError::CloneMissing(path.clone());
        if !path.is_dir() {
            return Err(missing());
        }
        let out = Command::new("git")
            .arg("-C")
            .arg(&path)
            .args(["rev-parse", "--git-dir"])
            .output()
            .map_err(|_| missing())?;
        if !out.status.success() {
            return Err(missing());
        }
        Ok(Self { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn run(&self, args: &[&str]) -> Result<Vec<u8>, MinerError> {
        let out = Command::new("git")
            .arg("-C")
            .arg(&self.path)
            .args(args)
            .output()
            .map_err(|e| MinerError::Git {
                command: args.join(" "),
                message: e.to_string(),
            })?;
        if !out.status.success() {
            return Err(MinerError::Git {
                command: args.join(" "),
                message: String::from_utf8_lossy(&out.stderr).trim().to_string(),
            });
        }
        Ok(out.stdout)
    }

    fn succeeds(&self, args: &[&str]) -> bool {
        Command::new("git")
            .arg("-C")
            .arg(&self.path)
            .args(args)
            .output()
            .is_ok_and(|o| o.status.success())
    }

    pub fn has_commit(&self, rev: &str) -> bool {
        !rev.starts_with('-') && self.succeeds(&["cat-file", "-e", &format!("{rev}^{{commit}}")])
    }

    /// First parent, or the empty tree for a root commit.
    pub fn first_parent(&self, rev: &str) -> Result<String, MinerError> {
        let out = self.run(&["rev-list", "--parents", "-n", "1", rev, "--"])?;
        let line = String::from_utf8_lossy(&out);
        Ok(line.split_whitespace().nth(1).unwrap_or(EMPTY_TREE).to_string())
    }

    /// Per-path line counts between two revisions, renames split into delete + add.
    pub fn numstat(&self, base: &str, tip: &str) -> Result<Vec<NumStat>, MinerError> {
        let out = self.run(&["diff", "--numstat", "--minimal", "--no-renames", "-z", base, tip, "--"])?;
        let mut stats = Vec::new();
        for rec in out.split(|b| *b == 0).filter(|r| !r.is_empty()) {
            let rec = String::from_utf8_lossy(rec);
            let mut parts = rec.splitn(3, '\t');
            let (Some(a), Some(r), Some(path)) = (parts.next(), parts.next(), parts.next()) else {
                continue;
            };
            // Binary files report "-".
            stats.push(NumStat {
                path: path.to_string(),
                added: a.parse().unwrap_or(0),
                removed: r.parse().unwrap_or(0),
            });
        }
        stats.sort_by(|x, y| x.path.cmp(&y.path));
        Ok(stats)
    }

    /// Line counts between one path at two revisions; either side may be absent.
    pub fn path_numstat(&self, base: &str, tip: &str, path: &str) -> Result<(u32, u32), MinerError> {
        let stats = self.numstat(base, tip)?;
        Ok(stats
            .iter()
            .find(|s| s.path == path)
            .map_or((0, 0), |s| (s.added, s.removed)))
    }

    /// Content of `path` at `rev`, or `None` when the path does not exist there.
    pub fn show(&self, rev: &str, path: &str) -> Result<Option<String>, MinerError> {
        if rev == EMPTY_TREE {
            return Ok(None);
        }
        let spec = format!("{rev}:{path}");
        if !self.succeeds(&["cat-file", "-e", &spec]) {
            return Ok(None);
        }
        let bytes = self.run(&["cat-file", "blob", &spec])?;
        Ok(Some(String::from_utf8_lossy(&bytes).into_owned()))
    }

    /// Maps issue numbers to commits whose messages close them, oldest first.
    pub fn trailer_index(&self, repo: &RepoId) -> Result<TrailerIndex, MinerError> {
        let out = self.run(&["log", "--all", "--reverse", "--topo-order", "--format=%H%x00%B%x1e"])?;
        let text = String::from_utf8_lossy(&out);
        let mut index = TrailerIndex::default();
        for rec in text.split('\u{1e}') {
            let Some((sha, body)) = rec.trim_start_matches('\n').split_once('\0') else {
                continue;
            };
            for issue in closing_references(body, repo) {
                let list = index.by_issue.entry(issue).or_default();
                if !list.iter().any(|s| s == sha) {
                    list.push(sha.to_string());
                }
            }
        }
        Ok(index)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrailerIndex {
    by_issue: BTreeMap<u64, Vec<String>>,
}

impl TrailerIndex {
    pub fn commits_for(&self, issue: u64) -> &[String] {
        self.by_issue.get(&issue).map_or(&[], Vec::as_slice)
    }
}

fn trailer_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(?:fix(?:es|ed)?|close[sd]?|resolve[sd]?)[:\s]+([\w.-]+/[\w.-]+)?#(\d+)\b").unwrap()
    })
}

/// Issue numbers referenced by "fixes #N" style keywords in a commit message.
pub fn closing_references(message: &str, repo: &RepoId) -> Vec<u64> {
    let own = repo.to_string();
    let mut out = Vec::new();
    for cap in trailer_regex().captures_iter(message) {
        if let Some(other) = cap.get(1) {
            if !other.as_str().eq_ignore_ascii_case(&own) {
                continue;
            }
        }
        if let Ok(n) = cap[2].parse::<u64>() {
            if !out.contains(&n) {
                out.push(n);
            }
        }
    }
    out
}


#[cfg(test)]
mod tests {
    use super::testrepo::*;
    use super::*;

    fn repo() -> RepoId {
        "lowRISC/opentitan".parse().unwrap()
    }

    #[test]
    fn trailer_keywords() {
        let r = repo();
        assert_eq!(closing_references("Fixes #12", &r), vec![12]);
        assert_eq!(
            closing_references("closes: #3\nresolved #4 and fixed #3", &r),
            vec![3, 4]
        );
        assert_eq!(closing_references("Fix lowRISC/opentitan#77", &r), vec![77]);
        assert_eq!(closing_references("Fix other/repo#77", &r), Vec::<u64>::new());
        assert_eq!(closing_references("see #5, prefix#6", &r), Vec::<u64>::new());
        assert_eq!(closing_references("suffixes #9", &r), Vec::<u64>::new());
    }

    #[test]
    fn missing_clone() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            GitRepo::open(dir.path().join("nope")),
            Err(MinerError::CloneMissing(_))
        ));
        // A plain directory is not a clone either.
        let plain = tempfile::tempdir().unwrap();
        if GitRepo::open(plain.path()).is_ok() {
            // Only possible when the temp dir sits inside a work tree.
            assert!(plain.path().ancestors().any(|p| p.join(".git").exists()));
        }
    }

    #[test]
    fn numstat_show_and_parents() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        init(d);
        let c1 = commit(d, &[("a.sv", Some("l1\nl2\nl3\n")), ("old.txt", Some("x\n"))], "init");
        let c2 = commit(
            d,
            &[
                ("a.sv", Some("l1\nL2\nl3\nl4\n")),
                ("old.txt", None),
                ("b.bin", Some("\0\x01\x02")),
            ],
            "Fixes #4",
        );
        let g = GitRepo::open(d).unwrap();
        assert!(g.has_commit(&c1));
        assert!(!g.has_commit("0123456789abcdef0123456789abcdef01234567"));
        assert_eq!(g.first_parent(&c2).unwrap(), c1);
        assert_eq!(g.first_parent(&c1).unwrap(), EMPTY_TREE);
        let stats = g.numstat(&c1, &c2).unwrap();
        assert_eq!(
            stats,
            vec![
                NumStat {
                    path: "a.sv".into(),
                    added: 2,
                    removed: 1
                },
                NumStat {
                    path: "b.bin".into(),
                    added: 0,
                    removed: 0
                },
                NumStat {
                    path: "old.txt".into(),
                    added: 0,
                    removed: 1
                },
            ]
        );
        assert_eq!(g.numstat(EMPTY_TREE, &c1).unwrap().len(), 2);
        assert_eq!(g.show(&c1, "a.sv").unwrap().as_deref(), Some("l1\nl2\nl3\n"));
        assert_eq!(g.show(&c2, "old.txt").unwrap(), None);
        assert_eq!(g.show(EMPTY_TREE, "a.sv").unwrap(), None);
        assert_eq!(g.trailer_index(&repo()).unwrap().commits_for(4), &[c2]);
    }
}
