//! Markdown rendering of a report bundle.

use std::fmt::Write as _;

use bugscope_core::metrics::{Cell, Entry, ReportBundle};

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

fn cell(c: &Cell) -> String {
    match c {
        Cell::Share { num, den } => match c.pct() {
            Some(p) => format!("{p}% ({num}/{den})"),
            None => format!("- ({num}/{den})"),
        },
        other => md_escape(&other.render()),
    }
}

fn table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let _ = writeln!(
        out,
        "| {} |",
        header.iter().map(|h| md_escape(h)).collect::<Vec<_>>().join(" | ")
    );
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for r in rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
    out.push('\n');
}

pub fn render_markdown(bundle: &ReportBundle) -> String {
    let mut out = String::from("# bugscope report\n\n");
    let m = &bundle.metadata;
    let _ = writeln!(out, "- tool version: {}", m.tool_version);
    let _ = writeln!(out, "- dataset hash: `{}`", m.dataset_hash);
    let _ = writeln!(out, "- config hash: `{}`", m.config_hash);
    let _ = writeln!(out, "- latest close: {}\n", m.timestamp.as_deref().unwrap_or("-"));
    for e in &bundle.entries {
        match e {
            Entry::Table(t) => {
                let _ = writeln!(out, "## {}\n", t.title);
                let rows: Vec<Vec<String>> = t.rows.iter().map(|r| r.iter().map(cell).collect()).collect();
                if rows.is_empty() {
                    out.push_str("(none)\n\n");
                } else {
                    table(&mut out, &t.columns, &rows);
                }
            }
            Entry::Histogram(h) => {
                let _ = writeln!(out, "## {}\n", h.title);
                let mut header = vec![h.x_label.clone()];
                header.extend(h.series.iter().map(|s| s.name.clone()));
                let rows: Vec<Vec<String>> = h
                    .bins
                    .iter()
                    .enumerate()
                    .map(|(i, b)| {
                        let mut r = vec![md_escape(&b.label)];
                        r.extend(
                            h.series
                                .iter()
                                .map(|s| s.counts.get(i).copied().unwrap_or(0).to_string()),
                        );
                        r
                    })
                    .collect();
                table(&mut out, &header, &rows);
            }
            Entry::Matrix(mx) => {
                let _ = writeln!(out, "## {}\n", mx.title);
                let mut header = vec!["impact".to_string()];
                header.extend(mx.columns.iter().cloned());
                header.push("row sum".to_string());
                header.push("bugs".to_string());
                let rows: Vec<Vec<String>> = mx
                    .rows
                    .iter()
                    .enumerate()
                    .map(|(r, name)| {
                        let mut row = vec![md_escape(name)];
                        row.extend(mx.counts[r].iter().map(u64::to_string));
                        row.push(mx.row_sum(r).to_string());
                        row.push(mx.row_totals.get(r).copied().unwrap_or(0).to_string());
                        row
                    })
                    .collect();
                table(&mut out, &header, &rows);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use bugscope_core::metrics::{Metadata, Table};

    #[test]
    fn renders_shares_with_counts() {
        let mut t = Table::new("x", "Shares", &["group", "share"]);
        t.push(vec![Cell::text("a|b"), Cell::share(90, 170)]);
        t.push(vec![Cell::text("none"), Cell::share(0, 0)]);
        let bundle = ReportBundle {
            metadata: Metadata {
                tool_version: "0".into(),
                dataset_hash: "d".into(),
                config_hash: "c".into(),
                timestamp: None,
            },
            entries: vec![Entry::Table(t)],
        };
        let md = render_markdown(&bundle);
        assert!(md.contains("| a\\|b | 52.9% (90/170) |"));
        assert!(md.contains("| none | - (0/0) |"));
        assert!(md.contains("|---|---|"));
    }
}
