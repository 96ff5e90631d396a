//! Hand-emitted SVG bar charts for the report bundle.
//!
//! Output depends only on the bundle: coordinates are printed with fixed
//! precision and nothing reads the clock or the environment. Each chart
//! embeds the CSV of its source entry in a leading comment.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bugscope_core::metrics::{Cell, Entry, ReportBundle};

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 90.0;
const MAX_X_LABELS: usize = 24;
const PALETTE: [&str; 8] = [
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Grouped,
    Stacked,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BarChart {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub categories: Vec<String>,
    pub series: Vec<(String, Vec<u64>)>,
    pub layout: Layout,
    /// Embedded verbatim (escaped) as the source-data comment.
    pub source: String,
}

impl BarChart {
    fn is_empty(&self) -> bool {
        self.categories.is_empty() || self.series.iter().all(|(_, v)| v.iter().all(|c| *c == 0))
    }

    fn y_max(&self) -> u64 {
        let n = self.categories.len();
        match self.layout {
            Layout::Grouped => self
                .series
                .iter()
                .flat_map(|(_, v)| v.iter().copied())
                .max()
                .unwrap_or(0),
            Layout::Stacked => (0..n)
                .map(|i| self.series.iter().map(|(_, v)| v.get(i).copied().unwrap_or(0)).sum())
                .max()
                .unwrap_or(0),
        }
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

/// Text safe inside `<!-- -->`: no `--` and no trailing `-`.
fn comment_safe(s: &str) -> String {
    let mut out = s.to_string();
    while out.contains("--") {
        out = out.replace("--", "- -");
    }
    if out.ends_with('-') {
        out.push(' ');
    }
    out
}

/// Tick step from {1, 2, 5} x 10^k giving at most about five intervals.
fn tick_step(max: u64) -> u64 {
    let mut step = 1;
    loop {
        for m in [1, 2, 5] {
            if max <= step * m * 5 {
                return step * m;
            }
        }
        step *= 10;
    }
}

pub fn render(chart: &BarChart) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<!-- source data: {}\n{}-->",
        chart.name,
        comment_safe(&chart.source)
    );
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(&chart.title)
    );
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let base = TOP + ph;

    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&chart.y_label)
    );

    if chart.is_empty() {
        let _ = writeln!(
            s,
            r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#999999"/>"##
        );
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="18" fill="#666666">no data</text>"##,
            LEFT + pw / 2.0,
            TOP + ph / 2.0
        );
        s.push_str("</svg>\n");
        return s;
    }

    let max = chart.y_max().max(1);
    let step = tick_step(max);
    let top_value = max.div_ceil(step) * step;
    let y_of = |v: u64| base - ph * v as f64 / top_value as f64;

    for t in (0..=top_value).step_by(step as usize) {
        let y = y_of(t);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r##"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{base:.2}" stroke="#333333"/>"##
    );
    let _ = writeln!(
        s,
        r##"<line x1="{LEFT}" y1="{base:.2}" x2="{:.2}" y2="{base:.2}" stroke="#333333"/>"##,
        LEFT + pw
    );

    let n = chart.categories.len();
    let group = pw / n as f64;
    let inner = group * 0.8;
    let k = chart.series.len().max(1);
    let label_every = n.div_ceil(MAX_X_LABELS);
    for (i, cat) in chart.categories.iter().enumerate() {
        let x0 = LEFT + group * i as f64 + (group - inner) / 2.0;
        let mut stack = 0u64;
        for (j, (name, values)) in chart.series.iter().enumerate() {
            let v = values.get(i).copied().unwrap_or(0);
            if v == 0 {
                continue;
            }
            let (x, w, lo, hi) = match chart.layout {
                Layout::Grouped => (x0 + inner / k as f64 * j as f64, inner / k as f64, 0, v),
                Layout::Stacked => {
                    let lo = stack;
                    stack += v;
                    (x0, inner, lo, stack)
                }
            };
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{:.2}" width="{w:.2}" height="{:.2}" fill="{}"><title>{}, {}: {v}</title></rect>"#,
                y_of(hi),
                y_of(lo) - y_of(hi),
                PALETTE[j % PALETTE.len()],
                escape(cat),
                escape(name)
            );
        }
        if i % label_every == 0 {
            let cx = LEFT + group * (i as f64 + 0.5);
            let cy = base + 14.0;
            let _ = writeln!(
                s,
                r#"<text x="{cx:.2}" y="{cy:.2}" text-anchor="end" transform="rotate(-40 {cx:.2} {cy:.2})">{}</text>"#,
                escape(cat)
            );
        }
    }

    let lx = LEFT + pw + 16.0;
    for (j, (name, _)) in chart.series.iter().enumerate() {
        let y = TOP + 20.0 * j as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.2}" y="{y:.2}" width="12" height="12" fill="{}"/>"#,
            PALETTE[j % PALETTE.len()]
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 18.0,
            y + 10.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn placeholder(name: &str, title: &str, x_label: &str, y_label: &str, layout: Layout) -> BarChart {
    BarChart {
        name: name.to_string(),
        title: title.to_string(),
        x_label: x_label.to_string(),
        y_label: y_label.to_string(),
        categories: vec![],
        series: vec![],
        layout,
        source: String::new(),
    }
}

fn histogram_chart(bundle: &ReportBundle, name: &str, fallback_title: &str, y_label: &str, layout: Layout) -> BarChart {
    let Some(h) = bundle.histogram(name) else {
        return placeholder(name, fallback_title, "", y_label, layout);
    };
    BarChart {
        name: name.to_string(),
        title: h.title.clone(),
        x_label: h.x_label.clone(),
        y_label: y_label.to_string(),
        categories: h.bins.iter().map(|b| b.label.clone()).collect(),
        series: h.series.iter().map(|s| (s.name.clone(), s.counts.clone())).collect(),
        layout,
        source: Entry::Histogram(h.clone()).to_csv(),
    }
}

fn matrix_chart(bundle: &ReportBundle) -> BarChart {
    let name = "impact_location_matrix";
    let Some(m) = bundle.matrix(name) else {
        return placeholder(
            name,
            "Bugs by impact and IP category",
            "IP category",
            "# bugs",
            Layout::Grouped,
        );
    };
    BarChart {
        name: name.to_string(),
        title: m.title.clone(),
        x_label: "IP category".to_string(),
        y_label: "# bugs".to_string(),
        categories: m.columns.clone(),
        series: m.rows.iter().cloned().zip(m.counts.iter().cloned()).collect(),
        layout: Layout::Grouped,
        source: Entry::Matrix(m.clone()).to_csv(),
    }
}

fn node_chart(bundle: &ReportBundle) -> BarChart {
    let name = "node_involvement";
    let Some(t) = bundle.table(name) else {
        return placeholder(
            name,
            "Bug fixes by node type",
            "node type",
            "# bug fixes",
            Layout::Grouped,
        );
    };
    let column = |col: &str| -> Vec<u64> {
        let idx = t.columns.iter().position(|c| c == col);
        t.rows
            .iter()
            .map(|r| match idx.and_then(|i| r.get(i)) {
                Some(Cell::Share { num, .. }) => *num,
                _ => 0,
            })
            .collect()
    };
    BarChart {
        name: name.to_string(),
        title: t.title.clone(),
        x_label: "node type".to_string(),
        y_label: "# bug fixes".to_string(),
        categories: t
            .rows
            .iter()
            .map(|r| r.first().map(Cell::render).unwrap_or_default())
            .collect(),
        series: vec![
            ("functional".to_string(), column("functional")),
            ("security".to_string(), column("security")),
        ],
        layout: Layout::Grouped,
        source: Entry::Table(t.clone()).to_csv(),
    }
}

/// The six charts, in a fixed order.
pub fn charts_for(bundle: &ReportBundle) -> Vec<BarChart> {
    vec![
        matrix_chart(bundle),
        histogram_chart(
            bundle,
            "message_histogram",
            "Messages per bug",
            "# bugs",
            Layout::Grouped,
        ),
        histogram_chart(
            bundle,
            "days_to_close_histogram",
            "Days to close",
            "# bugs",
            Layout::Grouped,
        ),
        histogram_chart(
            bundle,
            "files_changed_histogram",
            "Files changed per fix",
            "# fixes",
            Layout::Grouped,
        ),
        histogram_chart(
            bundle,
            "footprint_histogram",
            "Lines changed per fix",
            "# fixes",
            Layout::Stacked,
        ),
        node_chart(bundle),
    ]
}

/// Writes `<dir>/<name>.svg` for each chart and returns the paths.
pub fn emit_charts(bundle: &ReportBundle, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for chart in charts_for(bundle) {
        let path = dir.join(format!("{}.svg", chart.name));
        fs::write(&path, render(&chart))?;
        written.push(path);
    }
    Ok(written)
}
