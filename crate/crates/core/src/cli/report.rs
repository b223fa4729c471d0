//! Run reports and the files written for them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::scenario::Scenario;
use crate::certificate::BoundCertificate;

/// Round-trip-safe rendering: 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "nan".into()
    }
}

/// A numeric table with named columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| fmt_num(*x)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Two space-separated columns, one row per line.
    pub fn to_dat(&self, x: &str, y: &str) -> Option<String> {
        let (i, j) = (self.column(x)?, self.column(y)?);
        let mut s = format!("# {x} {y}\n");
        for row in &self.rows {
            let _ = writeln!(s, "{} {}", fmt_num(row[i]), fmt_num(row[j]));
        }
        Some(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRow {
    pub label: String,
    pub z: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub scenario: Scenario,
    pub summary: BTreeMap<String, f64>,
    pub events: Vec<EventRow>,
    pub certificates: Vec<BoundCertificate>,
    pub notes: Vec<String>,
    pub samples: usize,
    pub exit_code: i32,
    pub error: Option<String>,
    pub timing_ms: f64,
    pub files: Vec<PathBuf>,
    /// Extra structured output of a command (convention audit, oracle report).
    pub details: BTreeMap<String, serde_json::Value>,
}

impl RunReport {
    pub fn new(command: &str, scenario: Scenario) -> Self {
        Self {
            command: command.into(),
            scenario,
            summary: BTreeMap::new(),
            events: Vec::new(),
            certificates: Vec::new(),
            notes: Vec::new(),
            samples: 0,
            exit_code: 0,
            error: None,
            timing_ms: 0.0,
            files: Vec::new(),
            details: BTreeMap::new(),
        }
    }

    pub fn put(&mut self, key: &str, v: f64) {
        self.summary.insert(key.into(), v);
    }

    pub fn detail(&mut self, key: &str, v: &impl Serialize) {
        if let Ok(v) = serde_json::to_value(v) {
            self.details.insert(key.into(), v);
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_else(|e| format!("{{\"error\": \"{e}\"}}"))
    }
}

/// Report, table and the `(x, y)` column pairs to emit as plot files.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub table: Option<Table>,
    pub plots: Vec<(String, String)>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code
    }

    /// Writes `<stem>.csv`, `<stem>.json` and one `<y>_vs_<x>.dat` per plot.
    pub fn write(&mut self, dir: &Path, stem: &str) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        if let Some(t) = &self.table {
            let p = dir.join(format!("{stem}.csv"));
            std::fs::write(&p, t.to_csv())?;
            files.push(p);
            for (x, y) in &self.plots {
                if let Some(d) = t.to_dat(x, y) {
                    let p = dir.join(format!("{y}_vs_{x}.dat"));
                    std::fs::write(&p, d)?;
                    files.push(p);
                }
            }
        }
        let json = dir.join(format!("{stem}.json"));
        files.push(json.clone());
        self.report.files = files;
        std::fs::write(json, self.report.to_json())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1.25, -2.5e-300, 6.02214076e23] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn csv_and_dat_layout() {
        let mut t = Table::new(&["z", "t"]);
        t.push(vec![1.0, 2.0]);
        assert_eq!(
            t.to_csv(),
            "z,t\n1.0000000000000000e0,2.0000000000000000e0\n"
        );
        assert_eq!(
            t.to_dat("z", "t").unwrap().lines().nth(1).unwrap(),
            "1.0000000000000000e0 2.0000000000000000e0"
        );
        assert!(t.to_dat("z", "M").is_none());
    }
}
