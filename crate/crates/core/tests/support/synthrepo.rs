//! Synthetic git history with a line-level model of every file, plus an
//! LCS line-count oracle that never consults git.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use chrono::{TimeZone, Utc};

use bugscope_core::miner::{IssueRecord, IssueState};

pub const REPO: &str = "lowRISC/opentitan";

/// One synthetic commit: the issue it fixes and each path's content before
/// and after (`None` when absent).
#[derive(Debug, Clone)]
pub struct SynthCommit {
    pub issue: u64,
    pub sha: String,
    pub changes: BTreeMap<String, (Option<String>, Option<String>)>,
}

fn git(dir: &Path, args: &[&str]) -> String {
    let out = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(args)
        .env("GIT_AUTHOR_NAME", "fixture")
        .env("GIT_AUTHOR_EMAIL", "fixture@example.com")
        .env("GIT_COMMITTER_NAME", "fixture")
        .env("GIT_COMMITTER_EMAIL", "fixture@example.com")
        .env("GIT_AUTHOR_DATE", "2021-03-01T00:00:00Z")
        .env("GIT_COMMITTER_DATE", "2021-03-01T00:00:00Z")
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("HOME", dir)
        .output()
        .expect("git is installed");
    assert!(
        out.status.success(),
        "git {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap().trim().to_string()
}

/// Deterministic linear congruential generator.
struct Lcg(u64);

impl Lcg {
    fn next(&mut self, n: usize) -> usize {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((self.0 >> 33) % n as u64) as usize
    }
}

fn module_lines(name: &str, n: usize) -> Vec<String> {
    let mut v = vec![format!("module {name} ("), "  input logic clk_i".into(), ");".into()];
    for i in 0..n {
        v.push(match i % 4 {
            0 => format!("  assign w{i} = a{i};"),
            1 => "  always_comb begin".into(),
            2 => format!("    t{i} = b{i};"),
            _ => "  end".into(),
        });
    }
    v.push("endmodule".into());
    v
}

fn join(lines: &[String]) -> String {
    let mut s = lines.join("\n");
    s.push('\n');
    s
}

fn random_edit(lines: &mut Vec<String>, rng: &mut Lcg, tag: usize) {
    for op in 0..1 + rng.next(5) {
        let i = 3 + rng.next(lines.len().saturating_sub(4).max(1));
        match rng.next(4) {
            0 => lines[i] = format!("  assign e{tag}_{op} = x;"),
            1 => lines.insert(i, "  end".into()),
            2 if lines.len() > 6 => {
                lines.remove(i);
            }
            _ => {
                for k in 0..1 + rng.next(3) {
                    lines.insert(i, format!("    s{tag}_{op}_{k} = y;"));
                }
            }
        }
    }
}

/// Builds a repository of ten commits, each closing one issue.
pub fn build(dir: &Path) -> Vec<SynthCommit> {
    git(dir, &["init", "-q", "-b", "main"]);
    let mut files: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut rng = Lcg(20240611);
    let aes = "hw/ip/aes/rtl/aes_core.sv";
    let uart = "hw/ip/uart/rtl/uart_tx.sv";
    let tb = "hw/ip/aes/dv/aes_tb.sv";
    let readme = "README.md";
    let mut commits = Vec::new();
    for k in 0..10usize {
        let before = files.clone();
        match k {
            0 => {
                files.insert(aes.into(), module_lines("aes_core", 30));
                files.insert(readme.into(), vec!["# fixture".into()]);
            }
            1 => {
                let f = files.get_mut(aes).unwrap();
                f[5] = "  assign w2 = ~a2;".into();
                f[9] = "    t6 = b6 ^ c6;".into();
                f.insert(12, "  assign extra0 = 1'b0;".into());
                f.insert(12, "  assign extra1 = 1'b1;".into());
            }
            2 => {
                files.insert(uart.into(), module_lines("uart_tx", 20));
                files.get_mut(aes).unwrap().drain(20..25);
            }
            3 => {
                files.insert(tb.into(), module_lines("aes_tb", 8));
                files.get_mut(uart).unwrap()[4] = "  always_ff @(posedge clk_i) begin".into();
                files.get_mut(readme).unwrap().push("more".into());
            }
            9 => {
                files.remove(uart);
                let f = files.get_mut(aes).unwrap();
                f.truncate(f.len() - 4);
                f.push("endmodule".into());
            }
            _ => {
                for path in [aes, uart, tb] {
                    if rng.next(3) > 0 {
                        random_edit(files.get_mut(path).unwrap(), &mut rng, k);
                    }
                }
            }
        }
        let mut changes = BTreeMap::new();
        let paths: std::collections::BTreeSet<&String> = before.keys().chain(files.keys()).collect();
        for p in paths {
            let (b, a) = (before.get(p), files.get(p));
            if b != a {
                let full = dir.join(p);
                match a {
                    Some(lines) => {
                        std::fs::create_dir_all(full.parent().unwrap()).unwrap();
                        std::fs::write(&full, join(lines)).unwrap();
                    }
                    None => std::fs::remove_file(&full).unwrap(),
                }
                changes.insert(p.clone(), (b.map(|l| join(l)), a.map(|l| join(l))));
            }
        }
        let issue = 101 + k as u64;
        git(dir, &["add", "-A"]);
        git(
            dir,
            &[
                "commit",
                "-q",
                "--allow-empty",
                "-m",
                &format!("Synthetic change {k}\n\nFixes #{issue}"),
            ],
        );
        let sha = git(dir, &["rev-parse", "HEAD"]);
        commits.push(SynthCommit { issue, sha, changes });
    }
    commits
}

pub fn issue(number: u64) -> IssueRecord {
    IssueRecord {
        number,
        title: format!("issue {number}"),
        labels: vec!["Type:Bug".into()],
        state: IssueState::Closed,
        created_at: Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap(),
        closed_at: Some(Utc.with_ymd_and_hms(2021, 3, 1, 0, 0, 0).unwrap()),
        comment_count: 0,
        bot_comment_count: 0,
        linked_prs: vec![],
        closing_commits: vec![],
        body: String::new(),
    }
}

/// Lines added and removed by a minimal line diff, from the LCS length.
pub fn lcs_counts(before: Option<&str>, after: Option<&str>) -> (u32, u32) {
    let a: Vec<&str> = before.map(|s| s.lines().collect()).unwrap_or_default();
    let b: Vec<&str> = after.map(|s| s.lines().collect()).unwrap_or_default();
    let mut dp = vec![vec![0u32; b.len() + 1]; a.len() + 1];
    for i in (0..a.len()).rev() {
        for j in (0..b.len()).rev() {
            dp[i][j] = if a[i] == b[j] {
                dp[i + 1][j + 1] + 1
            } else {
                dp[i + 1][j].max(dp[i][j + 1])
            };
        }
    }
    let lcs = dp[0][0];
    (b.len() as u32 - lcs, a.len() as u32 - lcs)
}
