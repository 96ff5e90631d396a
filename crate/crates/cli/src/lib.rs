//! The `bugscope` command line: argument handling and the pipeline stages.
//!
//! Stage outputs:
//!
//! | stage            | reads                          | writes                                   |
//! |------------------|--------------------------------|------------------------------------------|
//! | `fetch`          | forge API, cache               | `<cache>/<owner>__<name>/{issues,pulls}.jsonl` |
//! | `resolve`        | cache, `--clone`               | `<cache>/<owner>__<name>/fixes.jsonl`    |
//! | `annotate-check` | cache, `--annotations`         | nothing                                  |
//! | `ast`            | cache                          | `<out>/ast_profiles.jsonl`               |
//! | `stats`          | cache, annotations, IP config  | `<out>/*.csv`, `<out>/index.json`, `<out>/warnings.txt` |
//! | `report`         | as `stats`                     | `<out>/charts/*.svg`, `<out>/report.md`  |

pub mod charts;
pub mod config;
pub mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::Path;

use bugscope_core::astdiff::{self, CategoryMap, FixAstProfile, ProfileOptions};
use bugscope_core::corpus::{self, Annotations, DatasetInputs, DesignFilter, IpCategoryMap};
use bugscope_core::metrics::{self, MetricsConfig, ReportBundle, ReportInputs};
use bugscope_core::miner::{
    self, BotPolicy, FetchOptions, FixRecord, FixSources, ForgeClient, GitRepo, IssueRecord, LabelFilter,
    PullRequestRecord, RepoCache, RepoId, FIXES_FILE, PULLS_FILE,
};
use bugscope_core::svparse::{self, SourceFile};
use clap::Parser;

use config::{AstArgs, Cli, Command, RunConfig};

/// A pipeline failure, tagged with the stage that raised it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub stage: &'static str,
    pub message: String,
}

impl Failure {
    pub fn new(stage: &'static str, message: impl Into<String>) -> Self {
        Self {
            stage,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed: {}", self.stage, self.message)
    }
}

trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure>;
}

impl<T, E: fmt::Display> StageExt<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure::new(stage, e.to_string()))
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
/// Returns 0 on success, 1 on a pipeline failure and 2 on a usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    init_logging(cli.flags.verbose);
    match execute(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            1
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let cfg = RunConfig::resolve(cli.flags)?;
    if let Command::Ast(args) = &cli.command {
        if args.file.is_some() || args.before.is_some() || args.after.is_some() {
            return inspect_files(args);
        }
    }
    let ctx = Context::new(cfg)?;
    match cli.command {
        Command::Fetch => ctx.fetch(),
        Command::Resolve => ctx.resolve(),
        Command::AnnotateCheck => ctx.annotate_check(),
        Command::Ast(_) => ctx.write_profiles(&ctx.profiles()?),
        Command::Stats => ctx.write_stats(&ctx.bundle(None)?),
        Command::Report => ctx.write_report(&ctx.bundle(None)?),
        Command::All => {
            ctx.fetch()?;
            ctx.resolve()?;
            let profiles = ctx.profiles()?;
            ctx.write_profiles(&profiles)?;
            let bundle = ctx.bundle(Some(&profiles))?;
            ctx.write_stats(&bundle)?;
            ctx.write_report(&bundle)
        }
    }
}

fn read_source(path: &Path, tag: &str) -> Result<SourceFile, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::new("ast", format!("{}: {e}", path.display())))?;
    SourceFile::from_bytes(path.display().to_string(), bytes, tag).stage("ast")
}

fn histogram(path: Option<&Path>, tag: &str) -> Result<astdiff::NodeHistogram, Failure> {
    match path {
        None => Ok(astdiff::NodeHistogram::new()),
        Some(p) => {
            let file = read_source(p, tag)?;
            svparse::histogram_of(&file).map_err(|e| Failure::new("ast", format!("{}: {e}", p.display())))
        }
    }
}

fn inspect_files(args: &AstArgs) -> Result<(), Failure> {
    if let Some(path) = &args.file {
        let file = read_source(path, "file")?;
        let tree = svparse::parse_source(&file).map_err(|e| Failure::new("ast", format!("{}: {e}", path.display())))?;
        print!("{}", tree.dump());
        let hist = svparse::count_nodes(&tree);
        println!("{}", serde_json::to_string_pretty(&hist).stage("ast")?);
        return Ok(());
    }
    let before = histogram(args.before.as_deref(), "before")?;
    let after = histogram(args.after.as_deref(), "after")?;
    let delta = astdiff::diff_histograms(&before, &after);
    println!("{}", serde_json::to_string_pretty(&delta).stage("ast")?);
    Ok(())
}

/// Repo id inferred from a cache root holding exactly one repository.
fn infer_repo(cache_root: &Path) -> Result<RepoId, Failure> {
    let entries = fs::read_dir(cache_root).map_err(|e| {
        Failure::new(
            "config",
            format!("--repo not given and cache {} unreadable: {e}", cache_root.display()),
        )
    })?;
    let mut found: Vec<RepoId> = entries
        .filter_map(Result::ok)
        .filter(|e| e.path().is_dir())
        .filter_map(|e| RepoId::from_cache_dir_name(&e.file_name().to_string_lossy()))
        .collect();
    found.sort();
    match found.len() {
        1 => Ok(found.remove(0)),
        0 => Err(Failure::new(
            "config",
            format!("--repo not given and no repository cached in {}", cache_root.display()),
        )),
        n => Err(Failure::new(
            "config",
            format!(
                "--repo not given and {n} repositories cached in {}",
                cache_root.display()
            ),
        )),
    }
}

struct Context {
    cfg: RunConfig,
    repo: RepoId,
    cache: RepoCache,
    forge: ForgeClient,
}

struct Loaded {
    issues: Vec<IssueRecord>,
    fixes: BTreeMap<u64, FixRecord>,
    pulls: BTreeMap<u64, PullRequestRecord>,
}

impl Context {
    fn new(cfg: RunConfig) -> Result<Self, Failure> {
        let repo = match &cfg.repo {
            Some(r) => r.clone(),
            None => infer_repo(&cfg.cache)?,
        };
        let cache = RepoCache::new(&cfg.cache, &repo);
        let forge = ForgeClient::from_env(cfg.api_url.clone(), &cfg.token_env);
        Ok(Self {
            cfg,
            repo,
            cache,
            forge,
        })
    }

    fn fetch_options(&self, offline: bool) -> FetchOptions {
        FetchOptions {
            labels: LabelFilter::parse(&self.cfg.labels),
            since: self.cfg.since,
            until: self.cfg.until,
            offline,
            refresh: self.cfg.refresh && !offline,
        }
    }

    fn bots(&self) -> BotPolicy {
        if self.cfg.exclude_bots {
            BotPolicy::Exclude
        } else {
            BotPolicy::Count
        }
    }

    fn fetch(&self) -> Result<(), Failure> {
        let opts = self.fetch_options(self.cfg.offline);
        let issues = miner::fetch_issues(&self.forge, &self.cache, &self.repo, &opts).stage("fetch")?;
        let pulls = miner::fetch_pulls(&self.forge, &self.cache, &self.repo, &issues, &opts).stage("fetch")?;
        println!(
            "fetch: {} issues, {} pull requests in {}",
            issues.len(),
            pulls.len(),
            self.cache.dir().display()
        );
        Ok(())
    }

    /// Cached issues matching the filters; never touches the network.
    fn cached_issues(&self, stage: &'static str) -> Result<Vec<IssueRecord>, Failure> {
        miner::fetch_issues(&self.forge, &self.cache, &self.repo, &self.fetch_options(true)).stage(stage)
    }

    fn cached_pulls(&self, stage: &'static str) -> Result<BTreeMap<u64, PullRequestRecord>, Failure> {
        if !self.cache.has(PULLS_FILE) {
            log::warn!("no cached pull requests in {}", self.cache.dir().display());
            return Ok(BTreeMap::new());
        }
        Ok(self
            .cache
            .read_pulls()
            .stage(stage)?
            .into_iter()
            .map(|p| (p.number, p))
            .collect())
    }

    fn cached_fixes(&self, stage: &'static str) -> Result<BTreeMap<u64, FixRecord>, Failure> {
        if !self.cache.has(FIXES_FILE) {
            return Err(Failure::new(
                stage,
                format!(
                    "no resolved fixes in {}; run `resolve --clone <path>` first",
                    self.cache.dir().display()
                ),
            ));
        }
        Ok(self
            .cache
            .read_fixes()
            .stage(stage)?
            .into_iter()
            .map(|f| (f.bug_id, f))
            .collect())
    }

    fn load(&self, stage: &'static str) -> Result<Loaded, Failure> {
        Ok(Loaded {
            issues: self.cached_issues(stage)?,
            fixes: self.cached_fixes(stage)?,
            pulls: self.cached_pulls(stage)?,
        })
    }

    fn resolve(&self) -> Result<(), Failure> {
        let Some(clone) = &self.cfg.clone else {
            if self.cfg.refresh {
                return Err(Failure::new("resolve", "--refresh needs --clone to re-resolve fixes"));
            }
            let fixes = self.cached_fixes("resolve")?;
            println!("resolve: using {} cached fixes (no --clone given)", fixes.len());
            return Ok(());
        };
        let issues = self.cached_issues("resolve")?;
        let pulls = self.cached_pulls("resolve")?;
        let git = GitRepo::open(clone).stage("resolve")?;
        let trailers = git.trailer_index(&self.repo).stage("resolve")?;
        let overrides = match &self.cfg.overrides {
            Some(p) => miner::load_overrides(p).stage("resolve")?,
            None => BTreeMap::new(),
        };
        let filter = DesignFilter::new(self.cfg.design.clone()).stage("resolve")?;
        let sources = FixSources {
            pulls: &pulls,
            trailers: &trailers,
            overrides: &overrides,
        };
        let mut all: BTreeMap<u64, FixRecord> = if self.cache.has(FIXES_FILE) {
            self.cache
                .read_fixes()
                .stage("resolve")?
                .into_iter()
                .map(|f| (f.bug_id, f))
                .collect()
        } else {
            BTreeMap::new()
        };
        let mut found = 0;
        for issue in &issues {
            let fix = miner::resolve_fix(issue, &git, sources, &filter).stage("resolve")?;
            found += usize::from(!fix.excluded);
            all.insert(issue.number, fix);
        }
        let records: Vec<FixRecord> = all.into_values().collect();
        self.cache.write_fixes(&records).stage("resolve")?;
        println!("resolve: {found} of {} issues linked to a fix", issues.len());
        Ok(())
    }

    fn annotations(&self, stage: &'static str, known: &BTreeSet<u64>) -> Result<Annotations, Failure> {
        let mut ann = match &self.cfg.annotations {
            Some(p) => corpus::load_annotations(p).stage(stage)?,
            None => {
                let mut a = Annotations::default();
                a.warnings
                    .push("no --annotations given, every bug counted as functional".to_string());
                a
            }
        };
        ann.check_known(known);
        Ok(ann)
    }

    fn annotate_check(&self) -> Result<(), Failure> {
        if self.cfg.annotations.is_none() {
            return Err(Failure::new("annotate-check", "--annotations is required"));
        }
        let issues = self.cached_issues("annotate-check")?;
        let known: BTreeSet<u64> = issues.iter().map(|i| i.number).collect();
        let ann = self.annotations("annotate-check", &known)?;
        for w in &ann.warnings {
            println!("warning: {w}");
        }
        let unannotated = known.iter().filter(|n| ann.get(**n).is_none()).count();
        let security = ann
            .rows
            .values()
            .filter(|a| a.class == corpus::BugClass::Security && !a.excluded)
            .count();
        let excluded = ann.rows.values().filter(|a| a.excluded).count();
        println!(
            "annotate-check: {} rows ({security} security, {excluded} excluded), {unannotated} of {} cached issues unannotated, {} warnings",
            ann.rows.len(),
            known.len(),
            ann.warnings.len()
        );
        Ok(())
    }

    fn profile_options(&self) -> ProfileOptions {
        ProfileOptions {
            mapping: if self.cfg.merge_continuous_assign {
                CategoryMap::with_continuous_assign_merged()
            } else {
                CategoryMap::default()
            },
            rule: self.cfg.touched_rule,
        }
    }

    /// Profiles of every resolved, non-excluded fix among the selected issues.
    fn profiles(&self) -> Result<BTreeMap<u64, FixAstProfile>, Failure> {
        let issues = self.cached_issues("ast")?;
        let fixes = self.cached_fixes("ast")?;
        let opts = self.profile_options();
        Ok(issues
            .iter()
            .filter_map(|i| fixes.get(&i.number))
            .filter(|f| !f.excluded)
            .map(|f| (f.bug_id, astdiff::profile_fix(f, &opts)))
            .collect())
    }

    fn write_profiles(&self, profiles: &BTreeMap<u64, FixAstProfile>) -> Result<(), Failure> {
        let mut text = String::new();
        for p in profiles.values() {
            text.push_str(&serde_json::to_string(p).stage("ast")?);
            text.push('\n');
        }
        fs::create_dir_all(&self.cfg.out).stage("ast")?;
        let path = self.cfg.out.join("ast_profiles.jsonl");
        fs::write(&path, text).map_err(|e| Failure::new("ast", format!("{}: {e}", path.display())))?;
        let skipped: usize = profiles.values().map(|p| p.skipped.len()).sum();
        println!(
            "ast: {} fixes profiled, {skipped} files unparsed, wrote {}",
            profiles.len(),
            path.display()
        );
        Ok(())
    }

    fn ip_map(&self, stage: &'static str) -> Result<IpCategoryMap, Failure> {
        match &self.cfg.ip_config {
            Some(p) => IpCategoryMap::load(p).stage(stage),
            None => Ok(IpCategoryMap::default()),
        }
    }

    /// Builds the report bundle, profiling fixes unless `profiles` is given.
    fn bundle(&self, profiles: Option<&BTreeMap<u64, FixAstProfile>>) -> Result<ReportBundle, Failure> {
        let Loaded { issues, fixes, pulls } = self.load("stats")?;
        let known: BTreeSet<u64> = issues.iter().map(|i| i.number).collect();
        let annotations = self.annotations("stats", &known)?;
        let ip_map = self.ip_map("stats")?;
        let dataset = corpus::build_dataset(&DatasetInputs {
            issues: &issues,
            fixes: &fixes,
            pulls: &pulls,
            annotations: &annotations,
            ip_map: &ip_map,
            bots: self.bots(),
        });
        let config = MetricsConfig {
            bin_days: self.cfg.bin_days,
            max_files: self.cfg.max_files,
            ..MetricsConfig::default()
        };
        let (population, _) = metrics::size_population(&dataset.bugs, config.max_files);
        let opts = self.profile_options();
        let profiles: BTreeMap<u64, FixAstProfile> = population
            .iter()
            .map(|b| {
                let p = profiles
                    .and_then(|all| all.get(&b.issue).cloned())
                    .unwrap_or_else(|| astdiff::profile_fix(&b.fix, &opts));
                (b.issue, p)
            })
            .collect();
        let settings = self.cfg.settings();
        let bundle = metrics::build_report(&ReportInputs {
            dataset: &dataset,
            profiles: &profiles,
            ip_map: &ip_map,
            config,
            settings: &settings,
            issues_considered: issues.len(),
        })
        .stage("stats")?;
        for w in dataset.warnings.iter().take(5) {
            log::warn!("{w}");
        }
        if dataset.warnings.len() > 5 {
            log::warn!("{} more warnings in warnings.txt", dataset.warnings.len() - 5);
        }
        fs::create_dir_all(&self.cfg.out).stage("stats")?;
        let mut text = dataset.warnings.join("\n");
        if !text.is_empty() {
            text.push('\n');
        }
        fs::write(self.cfg.out.join("warnings.txt"), text).stage("stats")?;
        Ok(bundle)
    }

    fn write_stats(&self, bundle: &ReportBundle) -> Result<(), Failure> {
        let written = bundle.write_to(&self.cfg.out).stage("stats")?;
        println!("stats: wrote {} files to {}", written.len(), self.cfg.out.display());
        Ok(())
    }

    fn write_report(&self, bundle: &ReportBundle) -> Result<(), Failure> {
        let charts = charts::emit_charts(bundle, &self.cfg.out.join("charts")).stage("report")?;
        let path = self.cfg.out.join("report.md");
        fs::write(&path, report::render_markdown(bundle))
            .map_err(|e| Failure::new("report", format!("{}: {e}", path.display())))?;
        println!("report: wrote {} charts and {}", charts.len(), path.display());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["bugscope", "stats", "--no-such-flag"]), 2);
        assert_eq!(run(["bugscope"]), 2);
        assert_eq!(run(["bugscope", "frobnicate"]), 2);
        assert_eq!(run(["bugscope", "--help"]), 0);
    }

    #[test]
    fn pipeline_errors_exit_1() {
        let dir = tempfile::tempdir().unwrap();
        let cache = dir.path().join("cache");
        fs::create_dir_all(&cache).unwrap();
        let out = dir.path().join("out");
        let args = |sub: &str| {
            vec![
                "bugscope".to_string(),
                sub.to_string(),
                "--offline".into(),
                "--cache".into(),
                cache.display().to_string(),
                "--out".into(),
                out.display().to_string(),
            ]
        };
        // No repository cached and none given.
        assert_eq!(run(args("stats")), 1);
        // Offline with a cold cache.
        let mut a = args("fetch");
        a.extend(["--repo".to_string(), "o/n".to_string()]);
        assert_eq!(run(a), 1);
        assert!(!out.exists());
    }

    #[test]
    fn repo_inference() {
        let dir = tempfile::tempdir().unwrap();
        assert!(infer_repo(dir.path()).is_err());
        fs::create_dir(dir.path().join("lowRISC__opentitan")).unwrap();
        fs::create_dir(dir.path().join("not-a-repo")).unwrap();
        assert_eq!(infer_repo(dir.path()).unwrap().to_string(), "lowRISC/opentitan");
        fs::create_dir(dir.path().join("a__b")).unwrap();
        assert!(infer_repo(dir.path()).unwrap_err().message.contains("2 repositories"));
    }

    #[test]
    fn ast_delta_mode() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.sv");
        let b = dir.path().join("b.sv");
        fs::write(&a, "module m; assign x = y; endmodule\n").unwrap();
        fs::write(&b, "module m; assign x = c ? y : z; endmodule\n").unwrap();
        let args = |v: &[&str]| {
            std::iter::once("bugscope")
                .chain(v.iter().copied())
                .map(String::from)
                .collect::<Vec<_>>()
        };
        assert_eq!(
            run(args(&[
                "ast",
                "--before",
                a.to_str().unwrap(),
                "--after",
                b.to_str().unwrap()
            ])),
            0
        );
        assert_eq!(run(args(&["ast", "--file", a.to_str().unwrap()])), 0);
        assert_eq!(run(args(&["ast", "--before", "/nonexistent.sv"])), 1);
        assert_eq!(
            run(args(&[
                "ast",
                "--file",
                a.to_str().unwrap(),
                "--after",
                b.to_str().unwrap()
            ])),
            2
        );
    }
}
