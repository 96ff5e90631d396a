//! Aggregate statistics over the bug dataset, packaged as a [`ReportBundle`].

mod bundle;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use bundle::{
    format_pct, format_ratio, Bin, Cell, Entry, Histogram, Matrix, Metadata, ReportBundle, Series, Table,
};

use crate::astdiff::{Category, FixAstProfile};
use crate::corpus::{AuditEntry, BugClass, BugRecord, Dataset, Impact, IpCategoryMap};

const DAY_MS: i128 = 86_400_000;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("the dataset is empty")]
    EmptyDataset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    pub bin_days: u32,
    pub max_files: usize,
    /// Bugs with more messages than this are tallied separately.
    pub message_threshold: u32,
    pub footprint_bin: u32,
    /// Footprints above this fall in one open-ended bin.
    pub footprint_max: u32,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            bin_days: 10,
            max_files: crate::corpus::DEFAULT_MAX_FILES,
            message_threshold: 10,
            footprint_bin: 10,
            footprint_max: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Overall,
    Year,
}

fn class_rows<'a>(bugs: &[&'a BugRecord]) -> Vec<(&'static str, Vec<&'a BugRecord>)> {
    let mut rows = vec![("all", bugs.to_vec())];
    for class in BugClass::ALL {
        rows.push((
            class.as_str(),
            bugs.iter().copied().filter(|b| b.class == class).collect(),
        ));
    }
    rows
}

fn mean(values: &[i128], unit: i128, decimals: u32) -> Cell {
    Cell::ratio(values.iter().sum(), values.len() as i128 * unit, decimals)
}

fn median(values: &[i128], unit: i128, decimals: u32) -> Cell {
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    match n {
        0 => Cell::ratio(0, 0, decimals),
        _ if n % 2 == 1 => Cell::ratio(v[n / 2], unit, decimals),
        _ => Cell::ratio(v[n / 2 - 1] + v[n / 2], 2 * unit, decimals),
    }
}

fn close_ms(b: &BugRecord) -> i128 {
    (b.closed_at - b.created_at).num_milliseconds().max(0) as i128
}

/// Share of security bugs, overall or per creation year.
pub fn security_share(bugs: &[BugRecord], group_by: GroupBy) -> Result<Table, MetricsError> {
    if bugs.is_empty() {
        return Err(MetricsError::EmptyDataset);
    }
    let mut groups: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for b in bugs {
        let key = match group_by {
            GroupBy::Overall => "overall".to_string(),
            GroupBy::Year => b.year.to_string(),
        };
        let g = groups.entry(key).or_default();
        g.0 += 1;
        g.1 += usize::from(b.class == BugClass::Security);
    }
    let mut t = Table::new(
        "security_share",
        "Security bugs among all bugs",
        &["group", "bugs", "security", "functional", "share"],
    );
    for (key, (n, s)) in groups {
        t.push(vec![
            Cell::text(key),
            Cell::int(n),
            Cell::int(s),
            Cell::int(n - s),
            Cell::share(s, n),
        ]);
    }
    Ok(t)
}

/// Security bugs per impact; a bug with several impacts counts under each.
pub fn impact_counts(bugs: &[BugRecord]) -> Table {
    let security: Vec<&BugRecord> = bugs.iter().filter(|b| b.class == BugClass::Security).collect();
    let mut t = Table::new(
        "impact_counts",
        "Security bugs by impact",
        &["impact", "bugs", "share_of_security"],
    );
    for imp in Impact::ALL {
        let n = security.iter().filter(|b| b.impacts.contains(imp)).count();
        t.push(vec![
            Cell::text(imp.name()),
            Cell::int(n),
            Cell::share(n, security.len()),
        ]);
    }
    t
}

/// Security bugs by impact and by the IP categories their fixes modified.
pub fn impact_location_matrix(bugs: &[BugRecord], ip_map: &IpCategoryMap) -> Matrix {
    let columns: Vec<String> = ip_map.categories().map(|c| c.0).collect();
    let mut counts = vec![vec![0u64; columns.len()]; Impact::ALL.len()];
    let mut row_totals = vec![0u64; Impact::ALL.len()];
    for b in bugs.iter().filter(|b| b.class == BugClass::Security) {
        for (r, imp) in Impact::ALL.iter().enumerate() {
            if !b.impacts.contains(*imp) {
                continue;
            }
            row_totals[r] += 1;
            for loc in &b.locations {
                if let Some(c) = columns.iter().position(|x| *x == loc.0) {
                    counts[r][c] += 1;
                }
            }
        }
    }
    Matrix {
        name: "impact_location_matrix".into(),
        title: "Security bugs by impact and IP category".into(),
        rows: Impact::ALL.iter().map(|i| i.name().to_string()).collect(),
        columns,
        counts,
        row_totals,
    }
}

fn class_series(bugs: &[&BugRecord], nbins: usize, bin_of: impl Fn(&BugRecord) -> usize) -> Vec<Series> {
    BugClass::ALL
        .iter()
        .map(|class| {
            let mut counts = vec![0u64; nbins];
            for b in bugs.iter().filter(|b| b.class == *class) {
                counts[bin_of(b)] += 1;
            }
            Series {
                name: class.as_str().to_string(),
                counts,
            }
        })
        .collect()
}

/// Per-integer message histogram and per-class summary.
pub fn message_stats(bugs: &[BugRecord], threshold: u32) -> (Histogram, Table) {
    let refs: Vec<&BugRecord> = bugs.iter().collect();
    let nbins = bugs.iter().map(|b| b.messages as usize + 1).max().unwrap_or(0);
    let hist = Histogram {
        name: "message_histogram".into(),
        title: "Bugs by number of messages in report and fix".into(),
        x_label: "messages".into(),
        interval: "[lo,hi)".into(),
        bins: (0..nbins)
            .map(|i| Bin {
                label: i.to_string(),
                lo: i as i64,
                hi: Some(i as i64 + 1),
            })
            .collect(),
        series: class_series(&refs, nbins, |b| b.messages as usize),
    };
    let over_col = format!("over_{threshold}");
    let share_col = format!("over_{threshold}_share");
    let mut t = Table::new(
        "message_stats",
        "Messages per bug",
        &["class", "bugs", "mean", "median_ext", &over_col, &share_col],
    );
    let over_total = bugs.iter().filter(|b| b.messages > threshold).count();
    for (label, group) in class_rows(&refs) {
        let vals: Vec<i128> = group.iter().map(|b| b.messages as i128).collect();
        let over = group.iter().filter(|b| b.messages > threshold).count();
        t.push(vec![
            Cell::text(label),
            Cell::int(group.len()),
            mean(&vals, 1, 2),
            median(&vals, 1, 2),
            Cell::int(over),
            Cell::share(over, over_total),
        ]);
    }
    (hist, t)
}

/// Days to close in right-open bins of `bin_days`, plus per-class means.
pub fn time_to_close_histogram(bugs: &[BugRecord], bin_days: u32) -> (Histogram, Table) {
    let refs: Vec<&BugRecord> = bugs.iter().collect();
    let width = bin_days.max(1) as i128 * DAY_MS;
    let bin_of = |b: &BugRecord| (close_ms(b) / width) as usize;
    let nbins = bugs.iter().map(|b| bin_of(b) + 1).max().unwrap_or(0);
    let step = bin_days.max(1) as i64;
    let hist = Histogram {
        name: "days_to_close_histogram".into(),
        title: "Bugs by days required to close".into(),
        x_label: "days".into(),
        interval: "[lo,hi)".into(),
        bins: (0..nbins as i64)
            .map(|i| Bin {
                label: format!("[{},{})", i * step, (i + 1) * step),
                lo: i * step,
                hi: Some((i + 1) * step),
            })
            .collect(),
        series: class_series(&refs, nbins, bin_of),
    };
    let mut t = Table::new(
        "days_to_close_stats",
        "Days to close",
        &["class", "bugs", "mean", "median_ext"],
    );
    for (label, group) in class_rows(&refs) {
        let vals: Vec<i128> = group.iter().map(|b| close_ms(b)).collect();
        t.push(vec![
            Cell::text(label),
            Cell::int(group.len()),
            mean(&vals, DAY_MS, 1),
            median(&vals, DAY_MS, 1),
        ]);
    }
    (hist, t)
}

/// Bugs whose fixes enter the size and construct statistics: at least one
/// design file and no more than `max_files`.
pub fn size_population(bugs: &[BugRecord], max_files: usize) -> (Vec<&BugRecord>, Vec<AuditEntry>) {
    let mut kept = Vec::new();
    let mut audit = Vec::new();
    for b in bugs {
        let n = b.files_changed();
        if n > max_files {
            audit.push(AuditEntry {
                issue: b.issue,
                stage: "outlier".into(),
                reason: format!("{n} design files changed (limit {max_files})"),
            });
        } else if n == 0 {
            audit.push(AuditEntry {
                issue: b.issue,
                stage: "no_design_files".into(),
                reason: "fix changed no design files".into(),
            });
        } else {
            kept.push(b);
        }
    }
    (kept, audit)
}

/// Design files changed per fix.
pub fn files_changed_stats(bugs: &[&BugRecord]) -> (Histogram, Table) {
    let max = bugs.iter().map(|b| b.files_changed()).max().unwrap_or(0);
    let hist = Histogram {
        name: "files_changed_histogram".into(),
        title: "Bugs by number of design files changed in the fix".into(),
        x_label: "files changed".into(),
        interval: "[lo,hi)".into(),
        bins: (1..=max as i64)
            .map(|i| Bin {
                label: i.to_string(),
                lo: i,
                hi: Some(i + 1),
            })
            .collect(),
        series: class_series(bugs, max, |b| b.files_changed().saturating_sub(1)),
    };
    let mut t = Table::new(
        "files_changed_stats",
        "Design files changed per fix",
        &["class", "fixes", "mean", "median_ext", "single_file"],
    );
    for (label, group) in class_rows(bugs) {
        let vals: Vec<i128> = group.iter().map(|b| b.files_changed() as i128).collect();
        let single = group.iter().filter(|b| b.files_changed() == 1).count();
        t.push(vec![
            Cell::text(label),
            Cell::int(group.len()),
            mean(&vals, 1, 2),
            median(&vals, 1, 2),
            Cell::share(single, group.len()),
        ]);
    }
    (hist, t)
}

pub const FILE_BUCKETS: [&str; 6] = ["1", "2", "3", "4", "5", ">5"];

/// Lines added plus removed per fix: cumulative shares and a histogram
/// grouped by the number of files changed.
pub fn footprint_stats(bugs: &[&BugRecord], cfg: &MetricsConfig) -> (Table, Histogram) {
    let mut t = Table::new(
        "footprint_stats",
        "Lines changed per fix",
        &["class", "fixes", "mean", "median_ext", "at_most_10", "at_most_30"],
    );
    for (label, group) in class_rows(bugs) {
        let vals: Vec<i128> = group.iter().map(|b| b.footprint() as i128).collect();
        let le = |n: u32| group.iter().filter(|b| b.footprint() <= n).count();
        t.push(vec![
            Cell::text(label),
            Cell::int(group.len()),
            mean(&vals, 1, 2),
            median(&vals, 1, 2),
            Cell::share(le(10), group.len()),
            Cell::share(le(30), group.len()),
        ]);
    }

    let step = cfg.footprint_bin.max(1);
    let closed = cfg.footprint_max.div_ceil(step) as usize;
    let mut bins = Vec::new();
    for i in 0..closed as u32 {
        let (lo, hi) = (
            if i == 0 { 0 } else { i * step + 1 },
            ((i + 1) * step).min(cfg.footprint_max),
        );
        let label = if i == 0 {
            format!("<={hi}")
        } else {
            format!("{lo}-{hi}")
        };
        bins.push(Bin {
            label,
            lo: lo as i64,
            hi: Some(hi as i64),
        });
    }
    bins.push(Bin {
        label: format!(">{}", cfg.footprint_max),
        lo: cfg.footprint_max as i64 + 1,
        hi: None,
    });
    let bin_of = |fp: u32| {
        if fp > cfg.footprint_max {
            closed
        } else {
            (fp.saturating_sub(1) / step) as usize
        }
    };
    let series = FILE_BUCKETS
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let mut counts = vec![0u64; bins.len()];
            for b in bugs.iter().filter(|b| b.files_changed().min(6) == k + 1) {
                counts[bin_of(b.footprint())] += 1;
            }
            Series {
                name: format!("{name} files"),
                counts,
            }
        })
        .collect();
    let hist = Histogram {
        name: "footprint_histogram".into(),
        title: "Bug fixes by lines changed, grouped by files changed".into(),
        x_label: "lines changed".into(),
        interval: "[lo,hi]".into(),
        bins,
        series,
    };
    (t, hist)
}

/// Share of fixes touching each construct category, overall and per class,
/// with the security-to-functional ratio of shares.
pub fn node_involvement(profiles: &BTreeMap<u64, FixAstProfile>, bugs: &[&BugRecord]) -> Table {
    let empty = BTreeSet::new();
    let touched = |b: &BugRecord| profiles.get(&b.issue).map_or(&empty, |p| &p.touched);
    let mut t = Table::new(
        "node_involvement",
        "Bug fixes adding or removing nodes of each type",
        &[
            "category",
            "all",
            "functional",
            "security",
            "security_to_functional_ext",
        ],
    );
    let groups = class_rows(bugs);
    for cat in Category::ALL {
        let counts: Vec<(usize, usize)> = groups
            .iter()
            .map(|(_, g)| (g.iter().filter(|b| touched(b).contains(&cat)).count(), g.len()))
            .collect();
        let (fs, fn_) = counts[1];
        let (ss, sn) = counts[2];
        t.push(vec![
            Cell::text(cat.code()),
            Cell::share(counts[0].0, counts[0].1),
            Cell::share(fs, fn_),
            Cell::share(ss, sn),
            Cell::ratio(ss as i128 * fn_ as i128, sn as i128 * fs as i128, 2),
        ]);
    }
    t
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Everything the report is computed from besides the dataset.
pub struct ReportInputs<'a> {
    pub dataset: &'a Dataset,
    pub profiles: &'a BTreeMap<u64, FixAstProfile>,
    pub ip_map: &'a IpCategoryMap,
    pub config: MetricsConfig,
    /// Canonical settings for the config hash.
    pub settings: &'a serde_json::Value,
    /// Issues considered before exclusions.
    pub issues_considered: usize,
}

pub fn build_report(inputs: &ReportInputs<'_>) -> Result<ReportBundle, MetricsError> {
    let ds = inputs.dataset;
    let bugs = &ds.bugs;
    let cfg = &inputs.config;
    let mut overall = security_share(bugs, GroupBy::Overall)?;
    let yearly = security_share(bugs, GroupBy::Year)?;
    overall.rows.extend(yearly.rows);

    let (population, size_audit) = size_population(bugs, cfg.max_files);
    let skipped_files: usize = population
        .iter()
        .filter_map(|b| inputs.profiles.get(&b.issue))
        .map(|p| p.skipped.len())
        .sum();

    let stage_count = |stage: &str, list: &[AuditEntry]| list.iter().filter(|a| a.stage == stage).count();
    let mut summary = Table::new("dataset_summary", "Dataset construction", &["item", "count"]);
    for (k, v) in [
        ("issues_considered", inputs.issues_considered),
        ("excluded_no_fix", stage_count("fix", &ds.excluded)),
        ("excluded_by_annotation", stage_count("annotation", &ds.excluded)),
        ("excluded_bad_timestamps", stage_count("timestamps", &ds.excluded)),
        ("retained", bugs.len()),
        ("functional", ds.count(BugClass::Functional)),
        ("security", ds.count(BugClass::Security)),
        ("fix_outliers_excluded", stage_count("outlier", &size_audit)),
        (
            "fixes_without_design_files",
            stage_count("no_design_files", &size_audit),
        ),
        ("fixes_in_size_analysis", population.len()),
        ("design_files_unparsed", skipped_files),
    ] {
        summary.push(vec![Cell::text(k), Cell::int(v)]);
    }
    let mut exclusions = Table::new(
        "exclusions",
        "Audit of excluded bugs and fixes",
        &["issue", "stage", "reason"],
    );
    for a in ds.excluded.iter().chain(&size_audit) {
        exclusions.push(vec![Cell::int(a.issue), Cell::text(&a.stage), Cell::text(&a.reason)]);
    }

    let (msg_hist, msg_table) = message_stats(bugs, cfg.message_threshold);
    let (days_hist, days_table) = time_to_close_histogram(bugs, cfg.bin_days);
    let (files_hist, files_table) = files_changed_stats(&population);
    let (fp_table, fp_hist) = footprint_stats(&population, cfg);
    let entries = vec![
        Entry::Table(summary),
        Entry::Table(exclusions),
        Entry::Table(overall),
        Entry::Table(impact_counts(bugs)),
        Entry::Matrix(impact_location_matrix(bugs, inputs.ip_map)),
        Entry::Histogram(msg_hist),
        Entry::Table(msg_table),
        Entry::Histogram(days_hist),
        Entry::Table(days_table),
        Entry::Histogram(files_hist),
        Entry::Table(files_table),
        Entry::Table(fp_table),
        Entry::Histogram(fp_hist),
        Entry::Table(node_involvement(inputs.profiles, &population)),
    ];

    let profiles: Vec<&FixAstProfile> = inputs.profiles.values().collect();
    let dataset_json = serde_json::to_vec(&(&ds.bugs, &ds.excluded, &profiles)).expect("dataset serializes");
    let settings_json = serde_json::to_vec(&(inputs.settings, cfg)).expect("settings serialize");
    let metadata = Metadata {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        dataset_hash: sha256_hex(&dataset_json),
        config_hash: sha256_hex(&settings_json),
        timestamp: bugs
            .iter()
            .map(|b| b.closed_at)
            .max()
            .map(|t| t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
    };
    Ok(ReportBundle { metadata, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ImpactSet, IpCategory};
    use crate::miner::{FileDiff, FixRecord, FixSource};
    use chrono::{Duration, TimeZone, Utc};

    fn bug(issue: u64, class: BugClass, impacts: &str) -> BugRecord {
        let created = Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap();
        BugRecord {
            issue,
            class,
            impacts: ImpactSet::parse(impacts).unwrap(),
            year: 2021,
            created_at: created,
            closed_at: created,
            locations: vec![],
            fix: FixRecord {
                bug_id: issue,
                source: FixSource::Commits { ids: vec![] },
                files: vec![],
                excluded: false,
                reason: None,
            },
            annotation_note: String::new(),
            days_to_close: 0.0,
            messages: 0,
        }
    }

    fn with_files(mut b: BugRecord, lines: &[(u32, u32)]) -> BugRecord {
        b.fix.files = lines
            .iter()
            .enumerate()
            .map(|(i, (a, r))| FileDiff {
                path: format!("f{i}.sv"),
                lines_added: *a,
                lines_removed: *r,
                before_content: Some(String::new()),
                after_content: Some(String::new()),
                generated_flag: false,
            })
            .collect();
        b
    }

    fn closing_after(mut b: BugRecord, days: f64) -> BugRecord {
        b.closed_at = b.created_at + Duration::milliseconds((days * 86_400_000.0).round() as i64);
        b.days_to_close = days;
        b
    }

    #[test]
    fn security_share_examples() {
        let f = |n| bug(n, BugClass::Functional, "");
        assert_eq!(security_share(&[], GroupBy::Overall), Err(MetricsError::EmptyDataset));
        let t = security_share(&[f(1), f(2)], GroupBy::Overall).unwrap();
        assert_eq!(t.cell("overall", "share").unwrap().render(), "0.0");
        let mut b = vec![f(1), bug(2, BugClass::Security, "C")];
        b[1].year = 2022;
        let t = security_share(&b, GroupBy::Year).unwrap();
        assert_eq!(t.cell("2021", "share").unwrap().render(), "0.0");
        assert_eq!(t.cell("2022", "share").unwrap().render(), "100.0");
    }

    #[test]
    fn impact_tallies_count_every_impact() {
        let t = impact_counts(&[bug(1, BugClass::Security, "CIA")]);
        for imp in ["confidentiality", "integrity", "availability"] {
            assert_eq!(t.cell(imp, "bugs"), Some(&Cell::int(1)));
        }
        let t = impact_counts(&[bug(1, BugClass::Functional, "")]);
        assert_eq!(t.cell("integrity", "bugs"), Some(&Cell::int(0)));
        assert_eq!(t.cell("integrity", "share_of_security").unwrap().render(), "");
    }

    #[test]
    fn matrix_counts_every_location() {
        let map = IpCategoryMap::default();
        let mut one = bug(1, BugClass::Security, "C");
        one.locations = vec![IpCategory("Memory".into())];
        let m = impact_location_matrix(&[one.clone()], &map);
        let nonzero: Vec<_> = m.counts.iter().flatten().filter(|c| **c > 0).collect();
        assert_eq!(nonzero, vec![&1]);
        assert_eq!(m.get("confidentiality", "Memory"), Some(1));

        let mut multi = bug(2, BugClass::Security, "CI");
        multi.locations = vec![IpCategory("Cryptography".into()), IpCategory("Debug".into())];
        let m = impact_location_matrix(&[one, multi], &map);
        assert_eq!(m.get("confidentiality", "Cryptography"), Some(1));
        assert_eq!(m.get("confidentiality", "Debug"), Some(1));
        assert_eq!(m.get("integrity", "Debug"), Some(1));
        assert_eq!(m.row_totals, vec![2, 1, 0]);
        assert_eq!(m.row_share("confidentiality", "Memory").unwrap().render(), "33.3");
        for (r, row) in m.counts.iter().enumerate() {
            assert!(row.iter().all(|c| *c <= m.row_totals[r]));
        }
    }

    #[test]
    fn day_bins_are_right_open() {
        let b = vec![
            closing_after(bug(1, BugClass::Functional, ""), 9.9),
            closing_after(bug(2, BugClass::Functional, ""), 10.0),
            closing_after(bug(3, BugClass::Security, "C"), 0.0),
            closing_after(bug(4, BugClass::Security, "C"), 25.0),
        ];
        let (h, t) = time_to_close_histogram(&b, 10);
        assert_eq!(h.bins.len(), 3);
        assert_eq!(h.bins[1].label, "[10,20)");
        assert_eq!(h.series("functional").unwrap().counts, vec![1, 1, 0]);
        assert_eq!(h.series("security").unwrap().counts, vec![1, 0, 1]);
        assert_eq!(t.cell("functional", "mean").unwrap().render(), "10.0");
        assert_eq!(t.cell("security", "mean").unwrap().render(), "12.5");
        assert_eq!(t.cell("all", "median_ext").unwrap().render(), "10.0");
        let (h, _) = time_to_close_histogram(&[], 10);
        assert!(h.is_empty());
    }

    #[test]
    fn message_summary() {
        let mut b: Vec<BugRecord> = (0..4).map(|i| bug(i, BugClass::Security, "A")).collect();
        for (x, m) in b.iter_mut().zip([11, 12, 3, 0]) {
            x.messages = m;
        }
        b.push(bug(9, BugClass::Functional, ""));
        b[4].messages = 15;
        let (h, t) = message_stats(&b, 10);
        assert_eq!(h.bins.len(), 16);
        assert_eq!(h.series.iter().map(|s| s.counts.iter().sum::<u64>()).sum::<u64>(), 5);
        assert_eq!(t.cell("security", "over_10"), Some(&Cell::int(2)));
        assert_eq!(t.cell("security", "over_10_share").unwrap().render(), "66.7");
        assert_eq!(t.cell("security", "mean").unwrap().render(), "6.50");
        let (h, _) = message_stats(&[], 10);
        assert!(h.bins.is_empty());
    }

    #[test]
    fn file_counts() {
        let b: Vec<BugRecord> = (0..3)
            .map(|i| with_files(bug(i, BugClass::Functional, ""), &[(1, 0)]))
            .collect();
        let refs: Vec<&BugRecord> = b.iter().collect();
        let (h, t) = files_changed_stats(&refs);
        assert_eq!(t.cell("all", "single_file").unwrap().render(), "100.0");
        assert_eq!(t.cell("all", "mean").unwrap().render(), "1.00");
        assert_eq!(h.bins.len(), 1);
    }

    #[test]
    fn footprint_examples() {
        let cfg = MetricsConfig::default();
        let small = with_files(bug(1, BugClass::Functional, ""), &[(3, 2)]);
        assert_eq!(small.footprint(), 5);
        let b: Vec<BugRecord> = (0..4)
            .map(|i| with_files(bug(i, BugClass::Security, "C"), &[(20, 11)]))
            .collect();
        let refs: Vec<&BugRecord> = b.iter().collect();
        let (t, _) = footprint_stats(&refs, &cfg);
        assert_eq!(t.cell("all", "at_most_10").unwrap().render(), "0.0");
        assert_eq!(t.cell("all", "at_most_30").unwrap().render(), "0.0");

        let edge: Vec<BugRecord> = [0u32, 10, 11, 100, 101]
            .iter()
            .enumerate()
            .map(|(i, fp)| with_files(bug(i as u64, BugClass::Functional, ""), &[(*fp, 0)]))
            .chain([with_files(bug(9, BugClass::Functional, ""), &[(1, 0); 7])])
            .collect();
        let refs: Vec<&BugRecord> = edge.iter().collect();
        let (_, h) = footprint_stats(&refs, &cfg);
        assert_eq!(h.bins.len(), 11);
        assert_eq!(h.bins[0].label, "<=10");
        assert_eq!(h.bins[1].label, "11-20");
        assert_eq!(h.bins[10].label, ">100");
        assert_eq!(h.series[0].counts, vec![2, 1, 0, 0, 0, 0, 0, 0, 0, 1, 1]);
        assert_eq!(h.series[5].name, ">5 files");
        assert_eq!(h.series[5].counts[0], 1);
    }

    #[test]
    fn size_population_rules() {
        let b = vec![
            with_files(bug(1, BugClass::Functional, ""), &[(1, 0); 42]),
            with_files(bug(2, BugClass::Functional, ""), &[(1, 0); 40]),
            bug(3, BugClass::Functional, ""),
        ];
        let (kept, audit) = size_population(&b, 40);
        assert_eq!(kept.iter().map(|b| b.issue).collect::<Vec<_>>(), vec![2]);
        assert_eq!(
            audit.iter().map(|a| a.stage.as_str()).collect::<Vec<_>>(),
            vec!["outlier", "no_design_files"]
        );
    }

    #[test]
    fn node_involvement_single_category() {
        let b = [with_files(bug(1, BugClass::Functional, ""), &[(1, 1)])];
        let refs: Vec<&BugRecord> = b.iter().collect();
        let mut profiles = BTreeMap::new();
        profiles.insert(
            1,
            FixAstProfile {
                fix_id: 1,
                touched: [Category::Assignment].into_iter().collect(),
                per_file: vec![],
                skipped: vec![],
            },
        );
        let t = node_involvement(&profiles, &refs);
        assert_eq!(t.rows.len(), 9);
        assert_eq!(t.cell("as", "all").unwrap().render(), "100.0");
        for c in Category::ALL.iter().skip(1) {
            assert_eq!(t.cell(c.code(), "all").unwrap().render(), "0.0");
        }
        assert_eq!(t.cell("as", "security").unwrap().render(), "");
    }

    #[test]
    fn bundle_is_deterministic() {
        let ds = Dataset {
            bugs: vec![
                closing_after(with_files(bug(1, BugClass::Security, "CI"), &[(3, 2)]), 4.5),
                closing_after(with_files(bug(2, BugClass::Functional, ""), &[(1, 0), (5, 5)]), 12.0),
            ],
            excluded: vec![],
            warnings: vec![],
        };
        let settings = serde_json::json!({"labels": ["x"]});
        let inputs = ReportInputs {
            dataset: &ds,
            profiles: &BTreeMap::new(),
            ip_map: &IpCategoryMap::default(),
            config: MetricsConfig::default(),
            settings: &settings,
            issues_considered: 2,
        };
        let a = build_report(&inputs).unwrap();
        let b = build_report(&inputs).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.metadata.dataset_hash.len(), 64);
        assert_eq!(a.metadata.timestamp.as_deref(), Some("2021-01-13T00:00:00Z"));
        let names: Vec<&str> = a.entries.iter().map(Entry::name).collect();
        let unique: BTreeSet<&str> = names.iter().copied().collect();
        assert_eq!(names.len(), unique.len());
        for h in a.entries.iter().filter_map(|e| match e {
            Entry::Histogram(h) => Some(h),
            _ => None,
        }) {
            let total: u64 = h.series.iter().map(|s| s.counts.iter().sum::<u64>()).sum();
            assert_eq!(total, 2, "{}", h.name);
        }
        let other = ReportInputs {
            config: MetricsConfig {
                bin_days: 7,
                ..MetricsConfig::default()
            },
            ..inputs
        };
        assert_ne!(
            build_report(&other).unwrap().metadata.config_hash,
            a.metadata.config_hash
        );
    }
}
