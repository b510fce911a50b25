//! Accuracy tables: rows are alignment method × normalization, columns are
//! run tags (usually the target language). Text for people, CSV for tools.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::pipeline::RunRecord;

/// One table cell before aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    pub method: String,
    pub normalization: String,
    pub tag: String,
    pub accuracy: f64,
}

impl From<&RunRecord> for TableEntry {
    fn from(r: &RunRecord) -> Self {
        TableEntry {
            method: r.method.clone(),
            normalization: r.normalization.clone(),
            tag: r.tag.clone(),
            accuracy: r.accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub method: String,
    pub normalization: String,
    /// Accuracy × 100, aligned with [`ResultTable::columns`].
    pub cells: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

/// Formats a fraction as a percentage with one decimal: 0.443 → "44.3".
pub fn format_accuracy(accuracy: f64) -> String {
    format_percent(accuracy * 100.0)
}

fn format_percent(p: f64) -> String {
    // Avoid "-0.0" from tiny negative rounding noise.
    let s = format!("{:.1}", p);
    if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

const METHOD_ORDER: [&str; 3] = ["Procrustes", "Procrustes + refine", "RCSLS"];
const NORM_ORDER: [&str; 3] = ["None", "C+L", "IN"];

fn rank(label: &str, order: &[&str]) -> usize {
    order.iter().position(|o| *o == label).unwrap_or(order.len())
}

fn inconsistent(reason: String) -> Error {
    Error::InvalidArgument(format!("inconsistent table columns: {reason}"))
}

impl ResultTable {
    /// Groups entries by (method, normalization) in first-seen order. Every
    /// row must cover exactly the same set of tags.
    pub fn from_entries(entries: &[TableEntry]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("no run records to tabulate".into()));
        }
        let mut columns: Vec<String> = Vec::new();
        for e in entries {
            if !columns.contains(&e.tag) {
                columns.push(e.tag.clone());
            }
        }
        let mut keys: Vec<(String, String)> = Vec::new();
        let mut cells: Vec<Vec<Option<f64>>> = Vec::new();
        for e in entries {
            let key = (e.method.clone(), e.normalization.clone());
            let row = match keys.iter().position(|k| *k == key) {
                Some(r) => r,
                None => {
                    keys.push(key);
                    cells.push(vec![None; columns.len()]);
                    keys.len() - 1
                }
            };
            let col = columns.iter().position(|c| *c == e.tag).unwrap();
            if cells[row][col].is_some() {
                return Err(inconsistent(format!(
                    "duplicate cell {} / {} / {}",
                    e.method, e.normalization, e.tag
                )));
            }
            cells[row][col] = Some(e.accuracy * 100.0);
        }
        let mut rows = Vec::with_capacity(keys.len());
        for ((method, normalization), row) in keys.into_iter().zip(cells) {
            let missing: Vec<&str> = row
                .iter()
                .zip(&columns)
                .filter(|(c, _)| c.is_none())
                .map(|(_, t)| t.as_str())
                .collect();
            if !missing.is_empty() {
                return Err(inconsistent(format!(
                    "row {method} / {normalization} lacks {}",
                    missing.join(", ")
                )));
            }
            rows.push(TableRow {
                method,
                normalization,
                cells: row.into_iter().map(Option::unwrap).collect(),
            });
        }
        // Known labels in the usual reading order; anything else keeps its
        // first-seen position after them.
        rows.sort_by_key(|r| (rank(&r.method, &METHOD_ORDER), rank(&r.normalization, &NORM_ORDER)));
        Ok(ResultTable { columns, rows })
    }

    pub fn from_records(records: &[RunRecord]) -> Result<Self> {
        let entries: Vec<TableEntry> = records.iter().map(TableEntry::from).collect();
        Self::from_entries(&entries)
    }

    /// `marks[r][c]` is true when row r holds the best value of column c
    /// among rows with the same method, compared at display precision.
    pub fn best_marks(&self) -> Vec<Vec<bool>> {
        let mut marks = vec![vec![false; self.columns.len()]; self.rows.len()];
        let methods: BTreeSet<&str> = self.rows.iter().map(|r| r.method.as_str()).collect();
        for m in methods {
            let group: Vec<usize> = (0..self.rows.len()).filter(|&i| self.rows[i].method == m).collect();
            for (c, _) in self.columns.iter().enumerate() {
                let shown = |i: usize| format_percent(self.rows[i].cells[c]).parse::<f64>().unwrap();
                let best = group.iter().map(|&i| shown(i)).fold(f64::NEG_INFINITY, f64::max);
                for &i in &group {
                    marks[i][c] = shown(i) == best;
                }
            }
        }
        marks
    }

    /// Fixed-width text; best cells per column and method carry a `*`.
    pub fn to_text(&self) -> String {
        let marks = self.best_marks();
        let method_w = self.rows.iter().map(|r| r.method.len()).chain([6]).max().unwrap();
        let norm_w = self
            .rows
            .iter()
            .map(|r| r.normalization.len())
            .chain([4])
            .max()
            .unwrap();
        let col_w: Vec<usize> = self.columns.iter().map(|c| c.len().max(6)).collect();

        let mut out = String::new();
        let _ = write!(out, "{:<method_w$}  {:<norm_w$}", "Method", "Norm");
        for (c, w) in self.columns.iter().zip(&col_w) {
            let _ = write!(out, "  {:>w$}", c);
        }
        out.push('\n');
        let mut prev: Option<&str> = None;
        for (row, mark) in self.rows.iter().zip(&marks) {
            let method = if prev == Some(row.method.as_str()) {
                ""
            } else {
                row.method.as_str()
            };
            prev = Some(&row.method);
            let _ = write!(out, "{:<method_w$}  {:<norm_w$}", method, row.normalization);
            for ((v, m), w) in row.cells.iter().zip(mark).zip(&col_w) {
                let cell = format!("{}{}", format_percent(*v), if *m { "*" } else { " " });
                let _ = write!(out, "  {:>w$}", cell, w = w + 1);
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<&str> = ["method", "normalization"]
            .into_iter()
            .chain(self.columns.iter().map(String::as_str))
            .collect();
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.method.clone(), row.normalization.clone()];
            rec.extend(row.cells.iter().map(|v| format_percent(*v)));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Parses CSV produced by [`ResultTable::to_csv`]. Cells keep the
    /// one-decimal precision they were written with.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers()?.clone();
        if header.len() < 3 || &header[0] != "method" || &header[1] != "normalization" {
            return Err(Error::InvalidArgument(
                "table CSV must start with method,normalization and at least one tag column".into(),
            ));
        }
        let columns: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let cells = rec
                .iter()
                .skip(2)
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad table cell {s:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(TableRow {
                method: rec[0].to_string(),
                normalization: rec[1].to_string(),
                cells,
            });
        }
        if rows.is_empty() {
            return Err(Error::InvalidArgument("table CSV has no rows".into()));
        }
        Ok(ResultTable { columns, rows })
    }
}

/// Renders run records as a text table.
pub fn emit_table(records: &[RunRecord]) -> Result<String> {
    Ok(ResultTable::from_records(records)?.to_text())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(method: &str, norm: &str, tag: &str, acc: f64) -> TableEntry {
        TableEntry {
            method: method.into(),
            normalization: norm.into(),
            tag: tag.into(),
            accuracy: acc,
        }
    }

    #[test]
    fn formats_one_decimal() {
        assert_eq!(format_accuracy(0.443), "44.3");
        assert_eq!(format_accuracy(0.0), "0.0");
        assert_eq!(format_accuracy(1.0), "100.0");
        assert_eq!(format_accuracy(-1e-12), "0.0");
    }

    #[test]
    fn single_record_cell() {
        let t = ResultTable::from_entries(&[entry("Procrustes", "IN", "ja", 0.443)]).unwrap();
        assert!(t.to_text().contains("44.3*"));
        assert_eq!(t.to_csv().unwrap(), "method,normalization,ja\nProcrustes,IN,44.3\n");
    }

    fn grid() -> Vec<TableEntry> {
        let mut v = Vec::new();
        for (m, base) in [("Procrustes", 0.40), ("RCSLS", 0.45)] {
            for (i, n) in ["None", "C+L", "IN"].iter().enumerate() {
                v.push(entry(m, n, "ja", base + 0.01 * i as f64));
                v.push(entry(m, n, "es", base + 0.3 - 0.01 * i as f64));
            }
        }
        v
    }

    #[test]
    fn marks_best_per_column_within_method() {
        let t = ResultTable::from_entries(&grid()).unwrap();
        assert_eq!(t.columns, ["ja", "es"]);
        let marks = t.best_marks();
        // ja: IN wins in both groups; es: None wins.
        assert_eq!(marks[2], [true, false]);
        assert_eq!(marks[0], [false, true]);
        assert_eq!(marks[5], [true, false]);
        assert_eq!(marks[3], [false, true]);
        assert_eq!(marks.iter().flatten().filter(|m| **m).count(), 4);
    }

    #[test]
    fn ties_at_display_precision_are_all_marked() {
        let t = ResultTable::from_entries(&[entry("P", "None", "x", 0.50001), entry("P", "IN", "x", 0.5)]).unwrap();
        assert_eq!(t.best_marks(), [[true], [true]]);
    }

    #[test]
    fn csv_round_trips() {
        let t = ResultTable::from_entries(&grid()).unwrap();
        let csv = t.to_csv().unwrap();
        let back = ResultTable::from_csv(&csv).unwrap();
        assert_eq!(back.to_csv().unwrap(), csv);
        assert_eq!(back.columns, t.columns);
        assert_eq!(back.rows.len(), 6);
    }

    #[test]
    fn rows_follow_canonical_order() {
        let t = ResultTable::from_entries(&[
            entry("RCSLS", "IN", "x", 0.1),
            entry("Other", "None", "x", 0.1),
            entry("Procrustes", "IN", "x", 0.1),
            entry("Procrustes", "None", "x", 0.1),
        ])
        .unwrap();
        let keys: Vec<(&str, &str)> = t
            .rows
            .iter()
            .map(|r| (r.method.as_str(), r.normalization.as_str()))
            .collect();
        assert_eq!(
            keys,
            [
                ("Procrustes", "None"),
                ("Procrustes", "IN"),
                ("RCSLS", "IN"),
                ("Other", "None")
            ]
        );
    }

    #[test]
    fn rejects_inconsistent_columns() {
        let mut g = grid();
        g.pop();
        assert!(ResultTable::from_entries(&g).is_err());
        let mut g = grid();
        g.push(entry("RCSLS", "IN", "ja", 0.1));
        assert!(ResultTable::from_entries(&g).is_err());
        assert!(ResultTable::from_entries(&[]).is_err());
    }
}
