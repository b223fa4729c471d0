use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::report::Table;
use super::run_scenario;
use super::scenario::{Command, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    OmegaLambda,
    C,
    CScale,
    Xi0,
    Z0,
}

impl SweepParam {
    pub fn key(self) -> &'static str {
        match self {
            SweepParam::OmegaLambda => "omega_lambda",
            SweepParam::C => "c",
            SweepParam::CScale => "c_scale",
            SweepParam::Xi0 => "xi0",
            SweepParam::Z0 => "z0",
        }
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s.replace('-', "_").as_str() {
            "omega" | "omega_lambda" => SweepParam::OmegaLambda,
            "c" => SweepParam::C,
            "c_scale" => SweepParam::CScale,
            "xi0" => SweepParam::Xi0,
            "z0" => SweepParam::Z0,
            _ => {
                return Err(format!(
                    "cannot sweep '{s}' (omega_lambda|c|c_scale|xi0|z0)"
                ))
            }
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub exit_code: i32,
    pub summary: BTreeMap<String, f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub command: String,
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// `value, exit_code` followed by every summary key seen in any row.
    pub fn table(&self) -> Table {
        let keys: BTreeSet<&String> = self.rows.iter().flat_map(|r| r.summary.keys()).collect();
        let mut header = vec!["value", "exit_code"];
        header.extend(keys.iter().map(|k| k.as_str()));
        let mut t = Table::new(&header);
        for r in &self.rows {
            let mut row = vec![r.value, r.exit_code as f64];
            row.extend(
                keys.iter()
                    .map(|k| r.summary.get(*k).copied().unwrap_or(f64::NAN)),
            );
            t.push(row);
        }
        t
    }
}

/// The column plotted against the swept value.
pub fn headline(cmd: Command) -> &'static str {
    match cmd {
        Command::Zlambda => "z_lambda",
        Command::Trace | Command::TraceDecoupled | Command::Crossing => "z_end",
        Command::FrwCheck => "max_rel_deviation",
        Command::Bounds => "all_hold",
    }
}

/// Runs one scenario per value in parallel; rows come back sorted by value
/// and a failed run only marks its own row.
pub fn sweep(base: &Scenario, cmd: Command, param: SweepParam, values: &[f64]) -> SweepReport {
    let mut values = values.to_vec();
    values.sort_by(f64::total_cmp);
    let rows = values
        .par_iter()
        .map(|&v| {
            let mut s = base.clone();
            s.command = Some(cmd);
            s.out = None;
            match param {
                SweepParam::C => s.c_scale = None,
                SweepParam::CScale => s.c = None,
                _ => {}
            }
            if let Err(e) = s.set(param.key(), &v.to_string()) {
                return SweepRow {
                    value: v,
                    exit_code: super::commands::EXIT_CONFIG,
                    summary: BTreeMap::new(),
                    error: Some(e),
                };
            }
            let out = run_scenario(&s);
            SweepRow {
                value: v,
                exit_code: out.exit_code(),
                summary: out.report.summary,
                error: out.report.error,
            }
        })
        .collect();
    SweepReport {
        command: cmd.name().into(),
        param,
        rows,
    }
}
