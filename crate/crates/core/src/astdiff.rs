//! Node-count histograms, their differences, and per-fix "touched construct"
//! profiles.
//!
//! The comparison is count based: a fix that replaces one blocking assignment
//! with another leaves the `as` count unchanged and is invisible here. That
//! limitation is intentional and covered by tests.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Neg};

use serde::{Deserialize, Serialize};

use crate::miner::FixRecord;
use crate::svparse::{self, NodeKind, SourceFile, SvParseError};

/// Node kind -> occurrence count. Zero counts are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeHistogram {
    counts: BTreeMap<NodeKind, u64>,
}

impl NodeHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(NodeKind, u64)]) -> Self {
        let mut h = Self::new();
        for &(kind, n) in pairs {
            h.add_count(kind, n);
        }
        h
    }

    pub fn increment(&mut self, kind: NodeKind) {
        self.add_count(kind, 1);
    }

    pub fn add_count(&mut self, kind: NodeKind, n: u64) {
        if n > 0 {
            *self.counts.entry(kind).or_default() += n;
        }
    }

    pub fn get(&self, kind: NodeKind) -> u64 {
        self.counts.get(&kind).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeKind, u64)> + '_ {
        self.counts.iter().map(|(k, v)| (*k, *v))
    }
}

impl Add for &NodeHistogram {
    type Output = NodeHistogram;

    fn add(self, rhs: &NodeHistogram) -> NodeHistogram {
        let mut out = self.clone();
        for (kind, n) in rhs.iter() {
            out.add_count(kind, n);
        }
        out
    }
}

/// Signed per-kind difference, `after - before`. Zero entries are omitted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HistogramDelta {
    deltas: BTreeMap<NodeKind, i64>,
}

impl HistogramDelta {
    pub fn from_pairs(pairs: &[(NodeKind, i64)]) -> Self {
        let mut d = Self::default();
        for &(kind, v) in pairs {
            d.add_value(kind, v);
        }
        d
    }

    fn add_value(&mut self, kind: NodeKind, v: i64) {
        let entry = self.deltas.entry(kind).or_default();
        *entry += v;
        if *entry == 0 {
            self.deltas.remove(&kind);
        }
    }

    pub fn get(&self, kind: NodeKind) -> i64 {
        self.deltas.get(&kind).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeKind, i64)> + '_ {
        self.deltas.iter().map(|(k, v)| (*k, *v))
    }
}

impl Add for &HistogramDelta {
    type Output = HistogramDelta;

    fn add(self, rhs: &HistogramDelta) -> HistogramDelta {
        let mut out = self.clone();
        for (kind, v) in rhs.iter() {
            out.add_value(kind, v);
        }
        out
    }
}

impl Neg for &HistogramDelta {
    type Output = HistogramDelta;

    fn neg(self) -> HistogramDelta {
        HistogramDelta {
            deltas: self.deltas.iter().map(|(k, v)| (*k, -v)).collect(),
        }
    }
}

/// Pointwise `after - before` over the union of keys.
pub fn diff_histograms(before: &NodeHistogram, after: &NodeHistogram) -> HistogramDelta {
    let mut delta = HistogramDelta::default();
    for (kind, n) in after.iter() {
        delta.add_value(kind, n as i64);
    }
    for (kind, n) in before.iter() {
        delta.add_value(kind, -(n as i64));
    }
    delta
}

/// Reported construct categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "as")]
    Assignment,
    #[serde(rename = "gen")]
    Generate,
    #[serde(rename = "a_c")]
    AlwaysComb,
    #[serde(rename = "a_ff")]
    AlwaysFf,
    #[serde(rename = "ca")]
    Case,
    #[serde(rename = "t")]
    Ternary,
    #[serde(rename = "co")]
    Conditional,
    #[serde(rename = "i")]
    Instantiation,
    #[serde(rename = "m")]
    Module,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::Assignment,
        Category::Generate,
        Category::AlwaysComb,
        Category::AlwaysFf,
        Category::Case,
        Category::Ternary,
        Category::Conditional,
        Category::Instantiation,
        Category::Module,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Category::Assignment => "as",
            Category::Generate => "gen",
            Category::AlwaysComb => "a_c",
            Category::AlwaysFf => "a_ff",
            Category::Case => "ca",
            Category::Ternary => "t",
            Category::Conditional => "co",
            Category::Instantiation => "i",
            Category::Module => "m",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Which node kinds feed each reported category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryMap {
    map: BTreeMap<NodeKind, Category>,
}

impl Default for CategoryMap {
    fn default() -> Self {
        use NodeKind::*;
        let map = [
            (ModuleDeclaration, Category::Module),
            (HierarchyInstantiation, Category::Instantiation),
            (AlwaysFfBlock, Category::AlwaysFf),
            (AlwaysCombBlock, Category::AlwaysComb),
            (GenerateConstruct, Category::Generate),
            (CaseStatement, Category::Case),
            (ConditionalStatement, Category::Conditional),
            (ConditionalExpression, Category::Ternary),
            (BlockingAssignment, Category::Assignment),
            (NonBlockingAssignment, Category::Assignment),
        ]
        .into_iter()
        .collect();
        Self { map }
    }
}

impl CategoryMap {
    /// Default mapping with `ContinuousAssign` folded into `as`.
    pub fn with_continuous_assign_merged() -> Self {
        let mut m = Self::default();
        m.map.insert(NodeKind::ContinuousAssign, Category::Assignment);
        m
    }

    pub fn category(&self, kind: NodeKind) -> Option<Category> {
        self.map.get(&kind).copied()
    }
}

/// When a category counts as touched.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TouchedRule {
    /// Any constituent kind changed, tested before merging kinds.
    #[default]
    PerKind,
    /// The summed delta over a category's kinds is nonzero.
    Merged,
}

pub fn touched_categories(delta: &HistogramDelta, mapping: &CategoryMap, rule: TouchedRule) -> BTreeSet<Category> {
    match rule {
        TouchedRule::PerKind => delta
            .iter()
            .filter(|(_, v)| *v != 0)
            .filter_map(|(k, _)| mapping.category(k))
            .collect(),
        TouchedRule::Merged => {
            let mut sums: BTreeMap<Category, i64> = BTreeMap::new();
            for (kind, v) in delta.iter() {
                if let Some(c) = mapping.category(kind) {
                    *sums.entry(c).or_default() += v;
                }
            }
            sums.into_iter().filter(|(_, v)| *v != 0).map(|(c, _)| c).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDelta {
    pub path: String,
    pub deltas: HistogramDelta,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixAstProfile {
    pub fix_id: u64,
    pub touched: BTreeSet<Category>,
    pub per_file: Vec<FileDelta>,
    pub skipped: Vec<SkippedFile>,
}

#[derive(Debug, Clone, Default)]
pub struct ProfileOptions {
    pub mapping: CategoryMap,
    pub rule: TouchedRule,
}

/// Profiles a fix with the built-in parser.
pub fn profile_fix(fix: &FixRecord, options: &ProfileOptions) -> FixAstProfile {
    profile_fix_with(fix, options, svparse::histogram_of)
}

/// Profiles a fix with any parse-and-count function. Absent file versions
/// count as an empty histogram; files failing on either side are skipped.
pub fn profile_fix_with<F>(fix: &FixRecord, options: &ProfileOptions, count: F) -> FixAstProfile
where
    F: Fn(&SourceFile) -> Result<NodeHistogram, SvParseError>,
{
    let side = |path: &str, content: Option<&String>, tag: &str| -> Result<NodeHistogram, String> {
        match content {
            None => Ok(NodeHistogram::new()),
            Some(text) => SourceFile::new(path, text.as_str(), tag)
                .and_then(|f| count(&f))
                .map_err(|e| format!("{tag}: {e}")),
        }
    };

    let mut touched = BTreeSet::new();
    let mut per_file = Vec::new();
    let mut skipped = Vec::new();
    for file in &fix.files {
        let before = side(&file.path, file.before_content.as_ref(), "before");
        let after = side(&file.path, file.after_content.as_ref(), "after");
        match (before, after) {
            (Ok(b), Ok(a)) => {
                let deltas = diff_histograms(&b, &a);
                touched.extend(touched_categories(&deltas, &options.mapping, options.rule));
                per_file.push(FileDelta {
                    path: file.path.clone(),
                    deltas,
                });
            }
            (Err(reason), _) | (_, Err(reason)) => skipped.push(SkippedFile {
                path: file.path.clone(),
                reason,
            }),
        }
    }
    per_file.sort_by(|a, b| a.path.cmp(&b.path));
    skipped.sort_by(|a, b| a.path.cmp(&b.path));
    FixAstProfile {
        fix_id: fix.bug_id,
        touched,
        per_file,
        skipped,
    }
}
