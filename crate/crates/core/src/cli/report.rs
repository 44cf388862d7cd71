//! Report files: `report.jsonl`, `summary.csv` and `.dat` plot data.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::evi::CheckReport;
use crate::verify::{finite_or_string, InequalityReport};

pub const REPORT_FILE: &str = "report.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_HEADER: &str = "check,slack,tolerance,passed";

/// One line of `report.jsonl`. Field order is part of the format.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub check: String,
    pub lhs: Value,
    pub rhs: Value,
    pub slack: Value,
    pub tolerance: Value,
    pub passed: bool,
    pub metadata: Map<String, Value>,
}

impl Record {
    /// Counts against the run: failed, applicable and not indicative.
    pub fn is_failure(&self) -> bool {
        let flag = |k: &str, default: bool| self.metadata.get(k).and_then(Value::as_bool).unwrap_or(default);
        !self.passed && flag("applicable", true) && !flag("indicative", false)
    }
}

impl From<InequalityReport> for Record {
    fn from(r: InequalityReport) -> Self {
        let mut metadata = r.metadata;
        metadata.insert("applicable".into(), json!(r.applicable));
        metadata.insert("indicative".into(), json!(r.indicative));
        Self {
            check: r.check,
            lhs: finite_or_string(r.lhs),
            rhs: finite_or_string(r.rhs),
            slack: finite_or_string(r.slack),
            tolerance: finite_or_string(r.tolerance),
            passed: r.passed,
            metadata,
        }
    }
}

impl From<CheckReport> for Record {
    fn from(r: CheckReport) -> Self {
        let mut metadata = Map::new();
        metadata.insert("applicable".into(), json!(true));
        metadata.insert("indicative".into(), json!(r.indicative));
        metadata.insert("samples".into(), json!(r.samples));
        metadata.insert("worst_case".into(), r.worst_case);
        Self {
            check: r.check_name,
            lhs: finite_or_string(r.lhs),
            rhs: finite_or_string(r.rhs),
            slack: finite_or_string(r.worst_slack),
            tolerance: finite_or_string(r.tolerance),
            passed: r.passed,
            metadata,
        }
    }
}

/// Two-column `(parameter, value)` data for one convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    /// File stem; written as `<name>.dat`.
    pub name: String,
    pub columns: [String; 2],
    pub rows: Vec<(f64, f64)>,
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Writes all report files into `dir`, creating it if needed. Lines follow
/// the order of `records`; plot rows are sorted by parameter, descending.
pub fn emit_report(dir: &Path, records: &[Record], plots: &[PlotData]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut jsonl = Vec::new();
    for r in records {
        serde_json::to_writer(&mut jsonl, r).map_err(io::Error::other)?;
        jsonl.push(b'\n');
    }
    fs::write(dir.join(REPORT_FILE), jsonl)?;
    write_summary(dir, records)?;
    for p in plots {
        let mut rows = p.rows.clone();
        rows.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut f = io::BufWriter::new(fs::File::create(dir.join(format!("{}.dat", p.name)))?);
        writeln!(f, "# {} {}", p.columns[0], p.columns[1])?;
        for (x, y) in rows {
            writeln!(f, "{x:e} {y:e}")?;
        }
        f.flush()?;
    }
    Ok(())
}

/// Writes `summary.csv` only.
pub fn write_summary(dir: &Path, records: &[Record]) -> io::Result<()> {
    let mut csv = format!("{SUMMARY_HEADER}\n");
    for r in records {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.check,
            scalar_text(&r.slack),
            scalar_text(&r.tolerance),
            r.passed
        ));
    }
    fs::write(dir.join(SUMMARY_FILE), csv)
}

/// Reads `report.jsonl` back.
pub fn read_report(dir: &Path) -> io::Result<Vec<Record>> {
    let text = fs::read_to_string(dir.join(REPORT_FILE))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v: Value = serde_json::from_str(l).map_err(io::Error::other)?;
            let field = |k: &str| v.get(k).cloned().unwrap_or(Value::Null);
            Ok(Record {
                check: field("check").as_str().unwrap_or_default().to_string(),
                lhs: field("lhs"),
                rhs: field("rhs"),
                slack: field("slack"),
                tolerance: field("tolerance"),
                passed: field("passed").as_bool().unwrap_or(false),
                metadata: field("metadata").as_object().cloned().unwrap_or_default(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_reports_still_have_headers() {
        let dir = tempfile::tempdir().unwrap();
        emit_report(dir.path(), &[], &[]).unwrap();
        assert_eq!(fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap(), "");
        assert_eq!(
            fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap(),
            format!("{SUMMARY_HEADER}\n")
        );
    }

    #[test]
    fn one_passing_check_and_field_order() {
        let dir = tempfile::tempdir().unwrap();
        let r = Record::from(InequalityReport::new("demo", 1.0, 2.0, 0.0));
        emit_report(dir.path(), &[r], &[]).unwrap();
        let text = fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with(r#"{"check":"demo","lhs":1.0,"rhs":2.0,"slack":1.0,"tolerance":0.0,"passed":true,"metadata":{"#));
        let back = read_report(dir.path()).unwrap();
        assert!(back[0].passed && !back[0].is_failure());
    }

    #[test]
    fn non_finite_values_become_strings() {
        let r = Record::from(InequalityReport::new("inf", f64::INFINITY, 0.0, 0.0));
        assert_eq!(r.lhs, json!("inf"));
        assert_eq!(r.slack, json!("-inf"));
    }

    #[test]
    fn plot_rows_sorted_descending() {
        let dir = tempfile::tempdir().unwrap();
        let p = PlotData {
            name: "study".into(),
            columns: ["eps".into(), "error".into()],
            rows: vec![(0.05, 3.0), (0.2, 1.0), (0.1, 2.0)],
        };
        emit_report(dir.path(), &[], &[p]).unwrap();
        let text = fs::read_to_string(dir.path().join("study.dat")).unwrap();
        let params: Vec<f64> = text
            .lines()
            .skip(1)
            .map(|l| l.split_whitespace().next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(params, vec![0.2, 0.1, 0.05]);
    }
}
