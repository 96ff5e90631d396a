use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Formats `num / den` with `decimals` places, rounding half to even.
pub fn format_ratio(num: i128, den: i128, decimals: u32) -> Option<String> {
    if den == 0 {
        return None;
    }
    let neg = (num < 0) != (den < 0);
    let (num, den) = (num.unsigned_abs(), den.unsigned_abs());
    let scale = 10u128.pow(decimals);
    let mut q = num * scale / den;
    let r = num * scale % den;
    if 2 * r > den || (2 * r == den && q % 2 == 1) {
        q += 1;
    }
    let int = q / scale;
    let frac = q % scale;
    let sign = if neg && q != 0 { "-" } else { "" };
    Some(if decimals == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac:0width$}", width = decimals as usize)
    })
}

/// Percentage with one decimal.
pub fn format_pct(num: u64, den: u64) -> Option<String> {
    format_ratio(num as i128 * 100, den as i128, 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Cell {
    Text {
        value: String,
    },
    Int {
        value: i64,
    },
    /// A percentage that keeps its numerator and denominator.
    Share {
        num: u64,
        den: u64,
    },
    /// An exact rational rendered with fixed decimals.
    Ratio {
        num: i128,
        den: i128,
        decimals: u32,
    },
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text { value: s.into() }
    }

    pub fn int(v: impl TryInto<i64>) -> Self {
        Cell::Int {
            value: v.try_into().unwrap_or(i64::MAX),
        }
    }

    pub fn share(num: usize, den: usize) -> Self {
        Cell::Share {
            num: num as u64,
            den: den as u64,
        }
    }

    pub fn ratio(num: i128, den: i128, decimals: u32) -> Self {
        Cell::Ratio { num, den, decimals }
    }

    pub fn pct(&self) -> Option<String> {
        match self {
            Cell::Share { num, den } => format_pct(*num, *den),
            _ => None,
        }
    }

    /// Display form; empty when undefined (zero denominator).
    pub fn render(&self) -> String {
        match self {
            Cell::Text { value } => value.clone(),
            Cell::Int { value } => value.to_string(),
            Cell::Share { num, den } => format_pct(*num, *den).unwrap_or_default(),
            Cell::Ratio { num, den, decimals } => format_ratio(*num, *den, *decimals).unwrap_or_default(),
        }
    }

    fn json(&self) -> Value {
        let number = |s: Option<String>| {
            s.and_then(|s| serde_json::from_str::<Value>(&s).ok())
                .unwrap_or(Value::Null)
        };
        match self {
            Cell::Text { value } => json!(value),
            Cell::Int { value } => json!(value),
            Cell::Share { num, den } => json!({"num": num, "den": den, "pct": number(format_pct(*num, *den))}),
            Cell::Ratio { num, den, decimals } => number(format_ratio(*num, *den, *decimals)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, title: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            title: title.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// The row whose first cell renders as `key`.
    pub fn row(&self, key: &str) -> Option<&[Cell]> {
        self.rows
            .iter()
            .find(|r| r.first().is_some_and(|c| c.render() == key))
            .map(Vec::as_slice)
    }

    pub fn cell(&self, key: &str, column: &str) -> Option<&Cell> {
        let idx = self.columns.iter().position(|c| c == column)?;
        self.row(key)?.get(idx)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bin {
    pub label: String,
    /// Inclusive lower edge.
    pub lo: i64,
    /// Upper edge; `None` for an open-ended bin.
    pub hi: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub name: String,
    pub title: String,
    pub x_label: String,
    /// How `lo`/`hi` are to be read, e.g. "[lo,hi)".
    pub interval: String,
    pub bins: Vec<Bin>,
    pub series: Vec<Series>,
}

impl Histogram {
    pub fn is_empty(&self) -> bool {
        self.bins.is_empty() || self.series.iter().all(|s| s.counts.iter().all(|c| *c == 0))
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matrix {
    pub name: String,
    pub title: String,
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    /// Per-row totals of the underlying population (bugs with that impact).
    pub row_totals: Vec<u64>,
}

impl Matrix {
    pub fn row_sum(&self, r: usize) -> u64 {
        self.counts[r].iter().sum()
    }

    pub fn get(&self, row: &str, col: &str) -> Option<u64> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.columns.iter().position(|x| x == col)?;
        Some(self.counts[r][c])
    }

    /// Share of a row's placements falling in `col`.
    pub fn row_share(&self, row: &str, col: &str) -> Option<Cell> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.columns.iter().position(|x| x == col)?;
        Some(Cell::Share {
            num: self.counts[r][c],
            den: self.row_sum(r),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Entry {
    Table(Table),
    Histogram(Histogram),
    Matrix(Matrix),
}

impl Entry {
    pub fn name(&self) -> &str {
        match self {
            Entry::Table(t) => &t.name,
            Entry::Histogram(h) => &h.name,
            Entry::Matrix(m) => &m.name,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut write = |rec: Vec<String>| w.write_record(&rec).expect("writing to memory");
        match self {
            Entry::Table(t) => {
                // Share columns expand into numerator, denominator and percentage.
                let share_cols: Vec<bool> = (0..t.columns.len())
                    .map(|i| t.rows.iter().any(|r| matches!(r[i], Cell::Share { .. })))
                    .collect();
                let mut header = Vec::new();
                for (c, share) in t.columns.iter().zip(&share_cols) {
                    if *share {
                        header.extend([format!("{c}_num"), format!("{c}_den"), format!("{c}_pct")]);
                    } else {
                        header.push(c.clone());
                    }
                }
                write(header);
                for row in &t.rows {
                    let mut rec = Vec::new();
                    for (cell, share) in row.iter().zip(&share_cols) {
                        match (cell, share) {
                            (Cell::Share { num, den }, _) => {
                                rec.extend([num.to_string(), den.to_string(), cell.render()]);
                            }
                            (_, true) => rec.extend([String::new(), String::new(), cell.render()]),
                            (_, false) => rec.push(cell.render()),
                        }
                    }
                    write(rec);
                }
            }
            Entry::Histogram(h) => {
                let mut header = vec!["bin".to_string(), "lo".to_string(), "hi".to_string()];
                header.extend(h.series.iter().map(|s| s.name.clone()));
                write(header);
                for (i, bin) in h.bins.iter().enumerate() {
                    let mut rec = vec![
                        bin.label.clone(),
                        bin.lo.to_string(),
                        bin.hi.map(|v| v.to_string()).unwrap_or_default(),
                    ];
                    rec.extend(h.series.iter().map(|s| s.counts[i].to_string()));
                    write(rec);
                }
            }
            Entry::Matrix(m) => {
                let mut header = vec!["impact".to_string()];
                header.extend(m.columns.iter().cloned());
                header.extend(["row_sum".to_string(), "impact_total".to_string()]);
                header.extend(m.columns.iter().map(|c| format!("{c}_pct")));
                write(header);
                for (r, name) in m.rows.iter().enumerate() {
                    let mut rec = vec![name.clone()];
                    rec.extend(m.counts[r].iter().map(u64::to_string));
                    rec.push(m.row_sum(r).to_string());
                    rec.push(m.row_totals[r].to_string());
                    rec.extend(
                        m.counts[r]
                            .iter()
                            .map(|c| format_pct(*c, m.row_sum(r)).unwrap_or_default()),
                    );
                    write(rec);
                }
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv of utf-8 strings")
    }

    fn to_json(&self) -> Value {
        match self {
            Entry::Table(t) => json!({
                "kind": "table",
                "name": t.name,
                "title": t.title,
                "columns": t.columns,
                "rows": t.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
            }),
            Entry::Histogram(h) => json!({
                "kind": "histogram",
                "name": h.name,
                "title": h.title,
                "x_label": h.x_label,
                "interval": h.interval,
                "bins": h.bins,
                "series": h.series,
            }),
            Entry::Matrix(m) => json!({
                "kind": "matrix",
                "name": m.name,
                "title": m.title,
                "rows": m.rows,
                "columns": m.columns,
                "counts": m.counts,
                "row_sums": (0..m.rows.len()).map(|r| m.row_sum(r)).collect::<Vec<_>>(),
                "row_totals": m.row_totals,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool_version: String,
    /// SHA-256 over the canonical JSON of the analyzed dataset and profiles.
    pub dataset_hash: String,
    /// SHA-256 over the canonical JSON of the analysis settings.
    pub config_hash: String,
    /// Latest close time in the dataset, so reruns produce identical bundles.
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub metadata: Metadata,
    pub entries: Vec<Entry>,
}

impl ReportBundle {
    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name() == name)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        match self.get(name)? {
            Entry::Table(t) => Some(t),
            _ => None,
        }
    }

    pub fn histogram(&self, name: &str) -> Option<&Histogram> {
        match self.get(name)? {
            Entry::Histogram(h) => Some(h),
            _ => None,
        }
    }

    pub fn matrix(&self, name: &str) -> Option<&Matrix> {
        match self.get(name)? {
            Entry::Matrix(m) => Some(m),
            _ => None,
        }
    }

    pub fn to_json(&self) -> String {
        let v = json!({
            "metadata": self.metadata,
            "entries": self.entries.iter().map(Entry::to_json).collect::<Vec<_>>(),
            "files": self.entries.iter().map(|e| format!("{}.csv", e.name())).collect::<Vec<_>>(),
        });
        let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
        s.push('\n');
        s
    }

    /// Writes `<name>.csv` per entry and `index.json`; returns the paths written.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for e in &self.entries {
            let p = dir.join(format!("{}.csv", e.name()));
            fs::write(&p, e.to_csv())?;
            written.push(p);
        }
        let p = dir.join("index.json");
        fs::write(&p, self.to_json())?;
        written.push(p);
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn half_even_rounding() {
        assert_eq!(format_pct(90, 170).as_deref(), Some("52.9"));
        assert_eq!(format_pct(1, 8).as_deref(), Some("12.5"));
        // 0.25 -> 0.2, 0.35 -> 0.4, 0.45 -> 0.4 at one decimal.
        assert_eq!(format_ratio(25, 100, 1).as_deref(), Some("0.2"));
        assert_eq!(format_ratio(35, 100, 1).as_deref(), Some("0.4"));
        assert_eq!(format_ratio(45, 100, 1).as_deref(), Some("0.4"));
        assert_eq!(format_ratio(377, 80, 2).as_deref(), Some("4.71"));
        assert_eq!(format_ratio(5, 1, 2).as_deref(), Some("5.00"));
        assert_eq!(format_ratio(-1, 3, 2).as_deref(), Some("-0.33"));
        assert_eq!(format_ratio(-1, 1000, 2).as_deref(), Some("0.00"));
        assert_eq!(format_ratio(7, 2, 0).as_deref(), Some("4"));
        assert_eq!(format_pct(0, 0), None);
        assert_eq!(format_pct(0, 5).as_deref(), Some("0.0"));
        assert_eq!(format_pct(3, 3).as_deref(), Some("100.0"));
    }

    proptest! {
        #[test]
        fn rounding_error_is_bounded(num in 0u64..100_000, den in 1u64..10_000) {
            let s = format_pct(num, den).unwrap();
            let shown: f64 = s.parse().unwrap();
            let exact = num as f64 * 100.0 / den as f64;
            prop_assert!((shown - exact).abs() <= 0.05 + 1e-9, "{} vs {}", s, exact);
        }
    }

    #[test]
    fn table_csv_expands_shares() {
        let mut t = Table::new("t", "T", &["group", "n", "share"]);
        t.push(vec![Cell::text("overall"), Cell::int(170), Cell::share(90, 170)]);
        t.push(vec![Cell::text("a,b"), Cell::int(0), Cell::share(0, 0)]);
        let csv = Entry::Table(t).to_csv();
        assert_eq!(
            csv,
            "group,n,share_num,share_den,share_pct\noverall,170,90,170,52.9\n\"a,b\",0,0,0,\n"
        );
    }

    #[test]
    fn histogram_and_matrix_csv() {
        let h = Histogram {
            name: "h".into(),
            title: "H".into(),
            x_label: "x".into(),
            interval: "[lo,hi)".into(),
            bins: vec![
                Bin {
                    label: "[0,10)".into(),
                    lo: 0,
                    hi: Some(10),
                },
                Bin {
                    label: ">=10".into(),
                    lo: 10,
                    hi: None,
                },
            ],
            series: vec![Series {
                name: "a".into(),
                counts: vec![1, 2],
            }],
        };
        assert_eq!(
            Entry::Histogram(h).to_csv(),
            "bin,lo,hi,a\n\"[0,10)\",0,10,1\n>=10,10,,2\n"
        );
        let m = Matrix {
            name: "m".into(),
            title: "M".into(),
            rows: vec!["C".into()],
            columns: vec!["X".into(), "Y".into()],
            counts: vec![vec![1, 3]],
            row_totals: vec![3],
        };
        assert_eq!(m.row_share("C", "Y").unwrap().render(), "75.0");
        assert_eq!(
            Entry::Matrix(m).to_csv(),
            "impact,X,Y,row_sum,impact_total,X_pct,Y_pct\nC,1,3,4,3,25.0,75.0\n"
        );
    }

    #[test]
    fn json_cells() {
        assert_eq!(Cell::share(90, 170).json(), json!({"num": 90, "den": 170, "pct": 52.9}));
        assert_eq!(Cell::share(0, 0).json(), json!({"num": 0, "den": 0, "pct": null}));
        assert_eq!(Cell::ratio(463, 159, 2).json(), json!(2.91));
    }
}
