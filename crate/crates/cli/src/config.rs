//! Command-line flags, the JSON config file, and the merged run configuration.

use std::path::{Path, PathBuf};

use bugscope_core::astdiff::TouchedRule;
use bugscope_core::corpus::DesignFilterConfig;
use bugscope_core::miner::{RepoId, DEFAULT_API_URL};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Parser)]
#[command(name = "bugscope", version, about = "Mine and characterize HDL bug fixes")]
pub struct Cli {
    #[command(flatten)]
    pub flags: Flags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fetch closed issues and linked pull requests into the cache
    Fetch,
    /// Resolve each issue to its fix and cache the design-file diffs
    Resolve,
    /// Validate the annotation file against the cached issues
    AnnotateCheck,
    /// Profile fixes at the AST level, or inspect single files
    Ast(AstArgs),
    /// Compute the report tables (CSV and index.json under --out)
    Stats,
    /// Render charts and a markdown summary under --out
    Report,
    /// Run fetch, resolve, ast, stats and report in order
    All,
}

#[derive(Debug, Args)]
pub struct AstArgs {
    /// File before the change; omitted means an empty histogram
    #[arg(long, value_name = "PATH", conflicts_with = "file")]
    pub before: Option<PathBuf>,
    /// File after the change; omitted means an empty histogram
    #[arg(long, value_name = "PATH", conflicts_with = "file")]
    pub after: Option<PathBuf>,
    /// Dump the AST and node histogram of one file
    #[arg(long, value_name = "PATH")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleArg {
    PerKind,
    Merged,
}

impl From<RuleArg> for TouchedRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::PerKind => TouchedRule::PerKind,
            RuleArg::Merged => TouchedRule::Merged,
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// JSON config file; flags given on the command line take precedence
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Repository as owner/name; inferred when the cache holds exactly one
    #[arg(long, global = true)]
    pub repo: Option<String>,
    /// Local git clone used to resolve fixes
    #[arg(long, global = true, value_name = "PATH")]
    pub clone: Option<PathBuf>,
    /// Label filter terms; `a+b` requires both labels
    #[arg(long, global = true, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
    /// Annotation CSV (issue,class,impacts,excluded,note)
    #[arg(long, global = true, value_name = "PATH")]
    pub annotations: Option<PathBuf>,
    /// IP category mapping (JSON object of category to IP names)
    #[arg(long, global = true, value_name = "PATH")]
    pub ip_config: Option<PathBuf>,
    /// Cache root directory [default: cache]
    #[arg(long, global = true, value_name = "DIR")]
    pub cache: Option<PathBuf>,
    /// Output directory [default: out]
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Never touch the network
    #[arg(long, global = true)]
    pub offline: bool,
    /// Fixes changing more design files than this are outliers [default: 40]
    #[arg(long, global = true)]
    pub max_files: Option<usize>,
    /// Width of the days-to-close bins [default: 10]
    #[arg(long, global = true)]
    pub bin_days: Option<u32>,
    /// Count continuous assignments as assignments
    #[arg(long, global = true)]
    pub merge_continuous_assign: bool,
    /// Environment variable holding the API token [default: BUGSCOPE_TOKEN]
    #[arg(long, global = true)]
    pub token_env: Option<String>,
    /// API base URL
    #[arg(long, global = true)]
    pub api_url: Option<String>,
    /// Earliest issue creation date (YYYY-MM-DD, inclusive)
    #[arg(long, global = true)]
    pub since: Option<chrono::NaiveDate>,
    /// Latest issue creation date (YYYY-MM-DD, inclusive)
    #[arg(long, global = true)]
    pub until: Option<chrono::NaiveDate>,
    /// Refetch and re-resolve even when the cache is warm
    #[arg(long, global = true)]
    pub refresh: bool,
    /// JSON file mapping issue numbers to fix commits
    #[arg(long, global = true, value_name = "PATH")]
    pub overrides: Option<PathBuf>,
    /// Leave bot-authored comments out of message counts
    #[arg(long, global = true)]
    pub exclude_bots: bool,
    /// Design-file extensions, without the dot
    #[arg(long, global = true, value_delimiter = ',')]
    pub design_extensions: Option<Vec<String>>,
    /// Globs excluded from the design files
    #[arg(long, global = true, value_delimiter = ',')]
    pub design_exclude: Option<Vec<String>>,
    /// Globs marking generated design files
    #[arg(long, global = true, value_delimiter = ',')]
    pub generated: Option<Vec<String>>,
    /// How a fix counts as touching a construct category [default: per-kind]
    #[arg(long, global = true, value_enum)]
    pub touched_rule: Option<RuleArg>,
    /// More log output (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

/// The JSON config file: same keys as the flags, in snake_case.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub repo: Option<String>,
    pub clone: Option<PathBuf>,
    pub labels: Option<Vec<String>>,
    pub annotations: Option<PathBuf>,
    pub ip_config: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub offline: Option<bool>,
    pub max_files: Option<usize>,
    pub bin_days: Option<u32>,
    pub merge_continuous_assign: Option<bool>,
    pub token_env: Option<String>,
    pub api_url: Option<String>,
    pub since: Option<chrono::NaiveDate>,
    pub until: Option<chrono::NaiveDate>,
    pub refresh: Option<bool>,
    pub overrides: Option<PathBuf>,
    pub exclude_bots: Option<bool>,
    pub design_extensions: Option<Vec<String>>,
    pub design_exclude: Option<Vec<String>>,
    pub generated: Option<Vec<String>>,
    pub touched_rule: Option<RuleArg>,
}

impl FileConfig {
    /// Reads a config file; relative paths in it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Failure::new("config", format!("{}: {e}", path.display())))?;
        let mut cfg: FileConfig =
            serde_json::from_str(&text).map_err(|e| Failure::new("config", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.clone,
            &mut cfg.annotations,
            &mut cfg.ip_config,
            &mut cfg.cache,
            &mut cfg.out,
            &mut cfg.overrides,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub repo: Option<RepoId>,
    pub clone: Option<PathBuf>,
    pub labels: Vec<String>,
    pub annotations: Option<PathBuf>,
    pub ip_config: Option<PathBuf>,
    pub design: DesignFilterConfig,
    pub cache: PathBuf,
    pub out: PathBuf,
    pub offline: bool,
    pub refresh: bool,
    pub max_files: usize,
    pub bin_days: u32,
    pub merge_continuous_assign: bool,
    pub touched_rule: TouchedRule,
    pub token_env: String,
    pub api_url: String,
    pub since: Option<chrono::NaiveDate>,
    pub until: Option<chrono::NaiveDate>,
    pub overrides: Option<PathBuf>,
    pub exclude_bots: bool,
}

impl RunConfig {
    /// Merges flags over the config file over defaults, then validates paths.
    pub fn resolve(flags: Flags) -> Result<Self, Failure> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let repo = match flags.repo.or(file.repo) {
            Some(r) => Some(r.parse::<RepoId>().map_err(|e| Failure::new("config", e.to_string()))?),
            None => None,
        };
        let mut design = DesignFilterConfig::default();
        if let Some(v) = flags.design_extensions.or(file.design_extensions) {
            design.extensions = v.into_iter().map(|e| e.trim_start_matches('.').to_string()).collect();
        }
        if let Some(v) = flags.design_exclude.or(file.design_exclude) {
            design.exclude = v;
        }
        if let Some(v) = flags.generated.or(file.generated) {
            design.generated = v;
        }
        let cfg = Self {
            repo,
            clone: flags.clone.or(file.clone),
            labels: flags.labels.or(file.labels).unwrap_or_default(),
            annotations: flags.annotations.or(file.annotations),
            ip_config: flags.ip_config.or(file.ip_config),
            design,
            cache: flags.cache.or(file.cache).unwrap_or_else(|| PathBuf::from("cache")),
            out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            offline: flags.offline || file.offline.unwrap_or(false),
            refresh: flags.refresh || file.refresh.unwrap_or(false),
            max_files: flags
                .max_files
                .or(file.max_files)
                .unwrap_or(bugscope_core::corpus::DEFAULT_MAX_FILES),
            bin_days: flags.bin_days.or(file.bin_days).unwrap_or(10),
            merge_continuous_assign: flags.merge_continuous_assign || file.merge_continuous_assign.unwrap_or(false),
            touched_rule: flags
                .touched_rule
                .or(file.touched_rule)
                .unwrap_or(RuleArg::PerKind)
                .into(),
            token_env: flags
                .token_env
                .or(file.token_env)
                .unwrap_or_else(|| "BUGSCOPE_TOKEN".to_string()),
            api_url: flags
                .api_url
                .or(file.api_url)
                .unwrap_or_else(|| DEFAULT_API_URL.to_string()),
            since: flags.since.or(file.since),
            until: flags.until.or(file.until),
            overrides: flags.overrides.or(file.overrides),
            exclude_bots: flags.exclude_bots || file.exclude_bots.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), Failure> {
        let must_be_file = [
            ("--annotations", &self.annotations),
            ("--ip-config", &self.ip_config),
            ("--overrides", &self.overrides),
        ];
        for (flag, p) in must_be_file {
            if let Some(p) = p {
                if !p.is_file() {
                    return Err(Failure::new("config", format!("{flag}: no such file {}", p.display())));
                }
            }
        }
        if let Some(c) = &self.clone {
            if !c.is_dir() {
                return Err(Failure::new(
                    "config",
                    format!("--clone: no such directory {}", c.display()),
                ));
            }
        }
        if self.bin_days == 0 {
            return Err(Failure::new("config", "--bin-days must be positive"));
        }
        if let (Some(s), Some(u)) = (self.since, self.until) {
            if s > u {
                return Err(Failure::new("config", format!("--since {s} is after --until {u}")));
            }
        }
        Ok(())
    }

    /// Analysis settings that affect results; paths are left out so the
    /// config hash does not depend on where files live.
    pub fn settings(&self) -> serde_json::Value {
        serde_json::json!({
            "labels": self.labels,
            "since": self.since,
            "until": self.until,
            "max_files": self.max_files,
            "bin_days": self.bin_days,
            "merge_continuous_assign": self.merge_continuous_assign,
            "touched_rule": match self.touched_rule { TouchedRule::PerKind => "per-kind", TouchedRule::Merged => "merged" },
            "exclude_bots": self.exclude_bots,
            "design": self.design,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("bugscope").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn defaults() {
        let cfg = RunConfig::resolve(parse(&["stats"]).flags).unwrap();
        assert_eq!(cfg.max_files, 40);
        assert_eq!(cfg.bin_days, 10);
        assert_eq!(cfg.token_env, "BUGSCOPE_TOKEN");
        assert_eq!(cfg.out, PathBuf::from("out"));
        assert!(!cfg.offline && !cfg.merge_continuous_assign);
        assert!(cfg.labels.is_empty());
        assert_eq!(cfg.touched_rule, TouchedRule::PerKind);
    }

    #[test]
    fn flags_after_subcommand_and_label_list() {
        let cli = parse(&[
            "stats",
            "--labels",
            "Type:Bug+Component:RTL,bug",
            "--offline",
            "--max-files",
            "7",
        ]);
        assert!(matches!(cli.command, Command::Stats));
        let cfg = RunConfig::resolve(cli.flags).unwrap();
        assert_eq!(cfg.labels, vec!["Type:Bug+Component:RTL", "bug"]);
        assert!(cfg.offline);
        assert_eq!(cfg.max_files, 7);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(
            &path,
            r#"{"max_files": 12, "bin_days": 5, "out": "reports", "offline": true, "repo": "a/b"}"#,
        )
        .unwrap();
        let cli = parse(&["stats", "--config", path.to_str().unwrap(), "--max-files", "3"]);
        let cfg = RunConfig::resolve(cli.flags).unwrap();
        assert_eq!(cfg.max_files, 3);
        assert_eq!(cfg.bin_days, 5);
        assert!(cfg.offline);
        assert_eq!(cfg.out, dir.path().join("reports"));
        assert_eq!(cfg.repo.unwrap().to_string(), "a/b");
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"max_file": 12}"#).unwrap();
        let err = RunConfig::resolve(parse(&["stats", "--config", path.to_str().unwrap()]).flags).unwrap_err();
        assert_eq!(err.stage, "config");
    }

    #[test]
    fn missing_paths_fail_validation() {
        let err = RunConfig::resolve(parse(&["stats", "--annotations", "/nonexistent/ann.csv"]).flags).unwrap_err();
        assert!(err.message.contains("--annotations"));
        let err = RunConfig::resolve(parse(&["resolve", "--clone", "/nonexistent/clone"]).flags).unwrap_err();
        assert!(err.message.contains("--clone"));
        let err = RunConfig::resolve(parse(&["stats", "--bin-days", "0"]).flags).unwrap_err();
        assert!(err.message.contains("bin-days"));
    }

    #[test]
    fn settings_ignore_paths() {
        let a = RunConfig::resolve(parse(&["stats", "--out", "x"]).flags).unwrap();
        let b = RunConfig::resolve(parse(&["stats", "--out", "y", "--cache", "z"]).flags).unwrap();
        assert_eq!(a.settings(), b.settings());
        let c = RunConfig::resolve(parse(&["stats", "--max-files", "41"]).flags).unwrap();
        assert_ne!(a.settings(), c.settings());
    }
}
