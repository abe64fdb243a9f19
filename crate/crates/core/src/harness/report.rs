//! Study reports and their CSV / JSON renderings.
//!
//! CSV layout: the fixed columns `kind,family,n,M,h,tau,status,message`
//! followed by the value columns of the report kind (see
//! [`ReportKind::value_columns`]). Numbers use 17 significant digits
//! (`{:.16e}`); absent values are empty fields.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{RateParameter, StudyConfig};
use crate::error::{Error, Result};

/// What a report contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Convergence,
    Stability,
    Bestapprox,
    Infsup,
    LerayH1,
}

impl ReportKind {
    pub fn name(self) -> &'static str {
        match self {
            ReportKind::Convergence => "convergence",
            ReportKind::Stability => "stability",
            ReportKind::Bestapprox => "bestapprox",
            ReportKind::Infsup => "infsup",
            ReportKind::LerayH1 => "leray_h1",
        }
    }

    /// Value columns of the CSV rendering, in order.
    pub fn value_columns(self) -> &'static [&'static str] {
        match self {
            ReportKind::Convergence => &[
                "l2l2",
                "l2h1",
                "linfl2_sampled",
                "outer_iterations",
                "max_outer_iterations",
                "max_residual",
                "max_divergence_defect",
                "factorizations",
            ],
            ReportKind::Stability => &[
                "dt_norm",
                "ah_norm",
                "jump_norm",
                "f_leray",
                "u0_grad",
                "lhs",
                "rhs",
                "ratio",
                "dt_grad_norm",
                "ah_grad_norm",
                "jump_grad_norm",
                "f_grad_inverse",
                "u0_leray",
                "lhs_grad",
                "rhs_grad",
                "ratio_grad",
            ],
            ReportKind::Bestapprox => &[
                "error_l2l2",
                "chi_l2l2",
                "pi_tau_l2l2",
                "ritz_l2l2",
                "ratio_l2l2",
                "error_l2h1",
                "chi_l2h1",
                "pi_tau_l2h1",
                "ritz_l2h1",
                "ratio_l2h1",
            ],
            ReportKind::Infsup => &["beta"],
            ReportKind::LerayH1 => &["grad_leray", "grad_field", "ratio"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Failed,
}

/// One study cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub family: usize,
    pub n: usize,
    /// Number of time intervals (absent for space-only probes).
    pub m: Option<usize>,
    pub h: f64,
    pub tau: Option<f64>,
    pub status: CellStatus,
    /// Failure description or a note such as a degenerate ratio.
    pub message: Option<String>,
    pub values: BTreeMap<String, f64>,
}

impl CellRow {
    pub fn value(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
}

/// Observed orders of one quantity along one refinement family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRecord {
    pub family: usize,
    pub quantity: String,
    pub parameter: RateParameter,
    /// Pairwise orders between consecutive cells.
    pub observed: Vec<f64>,
    pub expected: Option<f64>,
    /// `observed.last() >= expected - slack`; `None` when nothing is asserted.
    pub passed: Option<bool>,
    pub note: Option<String>,
}

/// A named pass/fail check derived from numbers in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub package_version: String,
    pub threads: usize,
    pub os: String,
    pub arch: String,
}

impl Environment {
    pub fn current(threads: usize) -> Self {
        Environment {
            package_version: env!("CARGO_PKG_VERSION").to_string(),
            threads,
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub kind: ReportKind,
    pub config: StudyConfig,
    pub rows: Vec<CellRow>,
    pub orders: Vec<OrderRecord>,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub environment: Environment,
}

impl StudyReport {
    /// Recompute `passed` from the rows, orders and checks.
    pub fn finalize(&mut self) {
        self.passed = self.rows.iter().all(|r| r.status == CellStatus::Ok)
            && self.orders.iter().all(|o| o.passed != Some(false))
            && self.checks.iter().all(|c| c.passed);
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write the CSV rendering.
pub fn write_csv(report: &StudyReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let columns = report.kind.value_columns();
    let mut header = vec!["kind", "family", "n", "M", "h", "tau", "status", "message"];
    header.extend_from_slice(columns);
    w.write_record(&header).map_err(csv_err)?;
    for row in &report.rows {
        let mut rec = vec![
            report.kind.name().to_string(),
            row.family.to_string(),
            row.n.to_string(),
            row.m.map_or(String::new(), |m| m.to_string()),
            fmt_num(row.h),
            row.tau.map_or(String::new(), fmt_num),
            match row.status {
                CellStatus::Ok => "ok".to_string(),
                CellStatus::Failed => "failed".to_string(),
            },
            row.message.clone().unwrap_or_default(),
        ];
        rec.extend(columns.iter().map(|c| row.value(c).map_or(String::new(), fmt_num)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

/// Write the JSON rendering (pretty-printed, trailing newline).
pub fn write_json(report: &StudyReport, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<StudyReport> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Write `<base>.csv` and `<base>.json`, creating parent directories.
pub fn write_report(report: &StudyReport, base: &Path) -> Result<(PathBuf, PathBuf)> {
    if let Some(parent) = base.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let with_ext = |ext: &str| {
        let mut s = base.as_os_str().to_owned();
        s.push(".");
        s.push(ext);
        PathBuf::from(s)
    };
    let (csv_path, json_path) = (with_ext("csv"), with_ext("json"));
    write_csv(report, &csv_path)?;
    write_json(report, &json_path)?;
    Ok((csv_path, json_path))
}
