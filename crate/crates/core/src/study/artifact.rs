//! Table artifacts: structured cells with significance markers, rendered to
//! a long-form CSV and an aligned text table, plus full regression and
//! portfolio dumps for audit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::panel::{fmt_number, CalendarMonth};
use crate::stats::RegressionResult;

use super::StudyError;

/// Significance stars at the 10/5/1% levels.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

/// One table cell.
#[derive(Debug, Clone)]
pub enum Cell {
    Empty,
    /// A plain number.
    Value(f64),
    /// A number with an inference pair, rendered "v*** (t)".
    WithT { value: f64, t: f64, p: f64 },
    /// A bare test statistic with its own significance, rendered "v***".
    Starred { value: f64, p: f64 },
    /// An integer count.
    Count(usize),
    Text(String),
}

#[derive(Debug, Clone)]
pub struct TableRow {
    pub label: String,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone)]
pub struct TablePanel {
    pub label: String,
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

/// Full regression output attached to an artifact for audit.
#[derive(Debug, Clone)]
pub struct RegressionDump {
    pub panel: String,
    pub row: String,
    pub terms: Vec<String>,
    pub months: Vec<CalendarMonth>,
    pub result: RegressionResult,
}

/// Monthly series of one test portfolio attached for audit.
#[derive(Debug, Clone)]
pub struct PortfolioDump {
    pub panel: String,
    pub row: String,
    pub months: Vec<CalendarMonth>,
    pub returns: Vec<f64>,
    pub excess_returns: Vec<f64>,
}

/// One reproducible study table.
#[derive(Debug, Clone)]
pub struct TableArtifact {
    pub table_id: String,
    pub title: String,
    pub panels: Vec<TablePanel>,
    pub regressions: Vec<RegressionDump>,
    pub portfolios: Vec<PortfolioDump>,
    /// (formation year, portfolio label, firm id) for every sort this table
    /// used.
    pub memberships: Vec<(i32, String, String)>,
}

impl TableArtifact {
    pub fn new(table_id: impl Into<String>, title: impl Into<String>) -> Self {
        TableArtifact {
            table_id: table_id.into(),
            title: title.into(),
            panels: Vec::new(),
            regressions: Vec::new(),
            portfolios: Vec::new(),
            memberships: Vec::new(),
        }
    }

    /// Long-form CSV: panel,row,column,value,t_stat,p_value,stars.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("panel,row,column,value,t_stat,p_value,stars\n");
        for panel in &self.panels {
            for row in &self.rows_of(panel) {
                for (col, cell) in panel.columns.iter().zip(&row.cells) {
                    let (value, t, p, mark) = match cell {
                        Cell::Empty => (String::new(), String::new(), String::new(), ""),
                        Cell::Value(v) => (fmt_number(*v), String::new(), String::new(), ""),
                        Cell::WithT { value, t, p } => (
                            fmt_number(*value),
                            fmt_number(*t),
                            fmt_number(*p),
                            stars(*p),
                        ),
                        Cell::Starred { value, p } => {
                            (fmt_number(*value), String::new(), fmt_number(*p), stars(*p))
                        }
                        Cell::Count(n) => (n.to_string(), String::new(), String::new(), ""),
                        Cell::Text(s) => (s.clone(), String::new(), String::new(), ""),
                    };
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        csv_field(&panel.label),
                        csv_field(&row.label),
                        csv_field(col),
                        value,
                        t,
                        p,
                        mark
                    );
                }
            }
        }
        out
    }

    fn rows_of<'a>(&self, panel: &'a TablePanel) -> Vec<&'a TableRow> {
        panel.rows.iter().collect()
    }

    /// Aligned plain-text rendering with one block per panel.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}  {}\n", self.table_id, self.title);
        for panel in &self.panels {
            let _ = writeln!(out, "\n== {}", panel.label);
            let mut grid: Vec<Vec<String>> = Vec::new();
            let mut header = vec![String::new()];
            header.extend(panel.columns.iter().cloned());
            grid.push(header);
            for row in &panel.rows {
                let mut line = vec![row.label.clone()];
                for cell in &row.cells {
                    line.push(match cell {
                        Cell::Empty => "-".to_string(),
                        Cell::Value(v) => format!("{v:.3}"),
                        Cell::WithT { value, t, p } => {
                            format!("{value:.3}{} ({t:.2})", stars(*p))
                        }
                        Cell::Starred { value, p } => format!("{value:.2}{}", stars(*p)),
                        Cell::Count(n) => n.to_string(),
                        Cell::Text(s) => s.clone(),
                    });
                }
                grid.push(line);
            }
            let widths: Vec<usize> = (0..grid[0].len())
                .map(|c| grid.iter().map(|r| r.get(c).map_or(0, String::len)).max().unwrap_or(0))
                .collect();
            for row in &grid {
                let mut line = String::new();
                for (c, cell) in row.iter().enumerate() {
                    let _ = write!(line, "{:>width$}  ", cell, width = widths[c]);
                }
                let _ = writeln!(out, "{}", line.trim_end());
            }
        }
        out
    }

    fn regressions_csv(&self) -> String {
        let mut out = String::from(
            "panel,row,term,coefficient,std_error,t_stat,p_value,n_obs,r_squared\n",
        );
        for dump in &self.regressions {
            let r = &dump.result;
            for (j, term) in dump.terms.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    csv_field(&dump.panel),
                    csv_field(&dump.row),
                    csv_field(term),
                    fmt_number(r.coefficients[j]),
                    fmt_number(r.std_errors[j]),
                    fmt_number(r.t_stats[j]),
                    fmt_number(r.p_values[j]),
                    r.n_obs,
                    fmt_number(r.r_squared),
                );
            }
        }
        out
    }

    fn residuals_csv(&self) -> String {
        let mut out = String::from("panel,row,year,month,residual,fitted\n");
        for dump in &self.regressions {
            for (i, month) in dump.months.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    csv_field(&dump.panel),
                    csv_field(&dump.row),
                    month.year(),
                    month.month(),
                    fmt_number(dump.result.residuals[i]),
                    fmt_number(dump.result.fitted[i]),
                );
            }
        }
        out
    }

    fn portfolios_csv(&self) -> String {
        let mut out = String::from("panel,row,year,month,return,excess_return\n");
        for dump in &self.portfolios {
            for (i, month) in dump.months.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    csv_field(&dump.panel),
                    csv_field(&dump.row),
                    month.year(),
                    month.month(),
                    fmt_number(dump.returns[i]),
                    fmt_number(dump.excess_returns[i]),
                );
            }
        }
        out
    }

    fn membership_csv(&self) -> String {
        let mut rows = self.memberships.clone();
        rows.sort();
        let mut out = String::from("formation_year,portfolio_label,firm_id\n");
        for (year, label, firm) in rows {
            let _ = writeln!(out, "{},{},{}", year, csv_field(&label), csv_field(&firm));
        }
        out
    }

    /// Writes every file of this artifact and returns (path, digest) pairs.
    pub fn write(&self, out_dir: &Path) -> Result<Vec<(PathBuf, String)>, StudyError> {
        let mut written = Vec::new();
        let mut emit = |name: String, body: String| -> Result<(), StudyError> {
            let path = out_dir.join(&name);
            std::fs::write(&path, body.as_bytes())
                .map_err(|e| StudyError::Io(format!("writing {}: {e}", path.display())))?;
            written.push((path, sha256_hex(body.as_bytes())));
            Ok(())
        };
        emit(format!("{}.csv", self.table_id), self.to_csv())?;
        emit(format!("{}.txt", self.table_id), self.to_text())?;
        if !self.regressions.is_empty() {
            emit(
                format!("{}_regressions.csv", self.table_id),
                self.regressions_csv(),
            )?;
            emit(
                format!("{}_residuals.csv", self.table_id),
                self.residuals_csv(),
            )?;
        }
        if !self.portfolios.is_empty() {
            emit(
                format!("{}_portfolios.csv", self.table_id),
                self.portfolios_csv(),
            )?;
        }
        if !self.memberships.is_empty() {
            emit(
                format!("{}_membership.csv", self.table_id),
                self.membership_csv(),
            )?;
        }
        Ok(written)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

/// The run manifest: input digests, the config hash, and every artifact with
/// its digest, in deterministic order.
#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    pub config_digest: String,
    pub inputs: BTreeMap<String, String>,
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,name,sha256\n");
        let _ = writeln!(out, "config,config,{}", self.config_digest);
        for (name, digest) in &self.inputs {
            let _ = writeln!(out, "input,{},{}", csv_field(name), digest);
        }
        for (name, digest) in &self.artifacts {
            let _ = writeln!(out, "artifact,{},{}", csv_field(name), digest);
        }
        out
    }
}
