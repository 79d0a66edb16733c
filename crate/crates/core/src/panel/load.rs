//! Delimiter-separated ingestion of fundamentals, returns, and factor files.
//!
//! All three loaders share the same contract: a mandatory header row with
//! fixed column names, numbers parsed as plain decimal strings at full
//! precision, blank cells meaning "missing". Rows that fail validation are
//! quarantined to a side report with their 1-based data row number; strict
//! mode turns the first quarantine into a hard error.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use super::month::{CalendarMonth, MonthWindow};
use super::records::{Exchange, FactorObservation, FirmYearRecord, MonthlyReturnRecord};
use super::PanelError;

/// Earliest month for which benchmark factor series are defined.
pub fn earliest_supported_month() -> CalendarMonth {
    CalendarMonth::new(1963, 7).expect("static month")
}

/// One rejected input row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuarantinedRow {
    /// 1-based data row number (header excluded).
    pub row: u64,
    pub reason: String,
}

/// Loader options shared by the fundamentals and returns loaders.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Abort on the first invalid row instead of quarantining it.
    pub strict: bool,
}

/// Result of loading one file: accepted records plus the quarantine report.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub quarantined: Vec<QuarantinedRow>,
}

pub const FUNDAMENTALS_COLUMNS: [&str; 16] = [
    "firm_id",
    "fiscal_year",
    "sic",
    "revenue",
    "cogs",
    "sga_expense",
    "rd_expense",
    "interest_expense",
    "net_income",
    "total_assets",
    "total_assets_prior",
    "book_equity",
    "market_equity",
    "market_equity_june",
    "ltg",
    "exchange",
];

pub const RETURNS_COLUMNS: [&str; 4] = ["firm_id", "year", "month", "total_return"];

pub const FACTORS_COLUMNS: [&str; 9] = [
    "year", "month", "mktrf", "smb", "hml", "rmw", "cma", "umd", "rf",
];

fn open_reader(path: &Path) -> Result<csv::Reader<File>, PanelError> {
    let file = File::open(path).map_err(|source| PanelError::FileUnreadable {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(file))
}

/// Maps required column names to their indices, or reports the first missing
/// column by name.
fn column_indices(
    reader: &mut csv::Reader<File>,
    required: &[&str],
) -> Result<BTreeMap<String, usize>, PanelError> {
    let headers = reader.headers().map_err(PanelError::Csv)?.clone();
    let mut map = BTreeMap::new();
    for (i, name) in headers.iter().enumerate() {
        map.insert(name.trim().to_string(), i);
    }
    for col in required {
        if !map.contains_key(*col) {
            return Err(PanelError::SchemaMismatch {
                column: (*col).to_string(),
            });
        }
    }
    Ok(map)
}

fn cell<'r>(record: &'r csv::StringRecord, cols: &BTreeMap<String, usize>, name: &str) -> &'r str {
    record.get(cols[name]).unwrap_or("").trim()
}

fn parse_f64(s: &str, column: &str) -> Result<f64, String> {
    let value: f64 = s
        .parse()
        .map_err(|_| format!("column {column}: unparseable number {s:?}"))?;
    // NaN and infinities would poison sorts and regressions downstream.
    if !value.is_finite() {
        return Err(format!("column {column}: non-finite number {s:?}"));
    }
    Ok(value)
}

/// Required numeric cell: blank is a missing-field drop, garbage is a parse
/// failure. Both quarantine the row.
fn required_f64(s: &str, column: &str) -> Result<f64, String> {
    if s.is_empty() {
        return Err(format!("missing required field {column}"));
    }
    parse_f64(s, column)
}

/// Loads and validates firm-year fundamentals.
///
/// Blank `rd_expense` becomes exactly 0; blank `ltg` becomes absent. A row
/// missing any other field is dropped with a counted diagnostic, as are rows
/// violating record invariants and duplicate (firm_id, fiscal_year) keys.
pub fn load_fundamentals(
    path: &Path,
    options: LoadOptions,
) -> Result<Loaded<FirmYearRecord>, PanelError> {
    let mut reader = open_reader(path)?;
    let cols = column_indices(&mut reader, &FUNDAMENTALS_COLUMNS)?;

    let mut records: Vec<FirmYearRecord> = Vec::new();
    let mut seen: BTreeMap<(String, i32), ()> = BTreeMap::new();
    let mut quarantined = Vec::new();
    let mut row_number = 0u64;

    for result in reader.records() {
        let record = result.map_err(PanelError::Csv)?;
        row_number += 1;
        match parse_fundamentals_row(&record, &cols) {
            Ok(rec) => {
                let key = (rec.firm_id.clone(), rec.fiscal_year);
                if seen.insert(key.clone(), ()).is_some() {
                    let reason = format!(
                        "duplicate (firm_id, fiscal_year) = ({}, {})",
                        key.0, key.1
                    );
                    if options.strict {
                        return Err(PanelError::RowRejected {
                            row: row_number,
                            reason,
                        });
                    }
                    quarantined.push(QuarantinedRow {
                        row: row_number,
                        reason,
                    });
                } else {
                    records.push(rec);
                }
            }
            Err(reason) => {
                if options.strict {
                    return Err(PanelError::RowRejected {
                        row: row_number,
                        reason,
                    });
                }
                quarantined.push(QuarantinedRow {
                    row: row_number,
                    reason,
                });
            }
        }
    }

    if row_number == 0 {
        return Err(PanelError::EmptyInput);
    }
    Ok(Loaded {
        records,
        quarantined,
    })
}

fn parse_fundamentals_row(
    record: &csv::StringRecord,
    cols: &BTreeMap<String, usize>,
) -> Result<FirmYearRecord, String> {
    let firm_id = cell(record, cols, "firm_id");
    if firm_id.is_empty() {
        return Err("missing required field firm_id".into());
    }
    let fiscal_year: i32 = {
        let s = cell(record, cols, "fiscal_year");
        if s.is_empty() {
            return Err("missing required field fiscal_year".into());
        }
        s.parse()
            .map_err(|_| format!("column fiscal_year: unparseable integer {s:?}"))?
    };
    let sic = cell(record, cols, "sic").to_string();
    if sic.is_empty() {
        return Err("missing required field sic".into());
    }
    let exchange: Exchange = {
        let s = cell(record, cols, "exchange");
        if s.is_empty() {
            return Err("missing required field exchange".into());
        }
        s.parse().map_err(|e| format!("column exchange: {e}"))?
    };

    let rd_cell = cell(record, cols, "rd_expense");
    // Missing R&D is materialized as exactly zero.
    let rd_expense = if rd_cell.is_empty() {
        0.0
    } else {
        parse_f64(rd_cell, "rd_expense")?
    };
    let ltg_cell = cell(record, cols, "ltg");
    let ltg = if ltg_cell.is_empty() {
        None
    } else {
        Some(parse_f64(ltg_cell, "ltg")?)
    };

    let rec = FirmYearRecord {
        firm_id: firm_id.to_string(),
        fiscal_year,
        sic,
        revenue: required_f64(cell(record, cols, "revenue"), "revenue")?,
        cogs: required_f64(cell(record, cols, "cogs"), "cogs")?,
        sga_expense: required_f64(cell(record, cols, "sga_expense"), "sga_expense")?,
        rd_expense,
        interest_expense: required_f64(
            cell(record, cols, "interest_expense"),
            "interest_expense",
        )?,
        net_income: required_f64(cell(record, cols, "net_income"), "net_income")?,
        total_assets: required_f64(cell(record, cols, "total_assets"), "total_assets")?,
        total_assets_prior: required_f64(
            cell(record, cols, "total_assets_prior"),
            "total_assets_prior",
        )?,
        book_equity: required_f64(cell(record, cols, "book_equity"), "book_equity")?,
        market_equity: required_f64(cell(record, cols, "market_equity"), "market_equity")?,
        market_equity_june: required_f64(
            cell(record, cols, "market_equity_june"),
            "market_equity_june",
        )?,
        ltg,
        exchange,
    };
    rec.check_invariants()?;
    Ok(rec)
}

/// Loads monthly returns. Duplicate (firm_id, month) keys are a hard error;
/// rows violating the return bound are quarantined.
pub fn load_returns(
    path: &Path,
    options: LoadOptions,
) -> Result<Loaded<MonthlyReturnRecord>, PanelError> {
    let mut reader = open_reader(path)?;
    let cols = column_indices(&mut reader, &RETURNS_COLUMNS)?;

    let mut records: Vec<MonthlyReturnRecord> = Vec::new();
    let mut seen: BTreeMap<(String, CalendarMonth), ()> = BTreeMap::new();
    let mut quarantined = Vec::new();
    let mut row_number = 0u64;

    for result in reader.records() {
        let record = result.map_err(PanelError::Csv)?;
        row_number += 1;
        match parse_returns_row(&record, &cols) {
            Ok(rec) => {
                let key = (rec.firm_id.clone(), rec.month);
                if seen.contains_key(&key) {
                    return Err(PanelError::DuplicateKey {
                        key: format!("({}, {})", key.0, key.1),
                    });
                }
                seen.insert(key, ());
                records.push(rec);
            }
            Err(reason) => {
                if options.strict {
                    return Err(PanelError::RowRejected {
                        row: row_number,
                        reason,
                    });
                }
                quarantined.push(QuarantinedRow {
                    row: row_number,
                    reason,
                });
            }
        }
    }
    if row_number == 0 {
        return Err(PanelError::EmptyInput);
    }
    Ok(Loaded {
        records,
        quarantined,
    })
}

fn parse_returns_row(
    record: &csv::StringRecord,
    cols: &BTreeMap<String, usize>,
) -> Result<MonthlyReturnRecord, String> {
    let firm_id = cell(record, cols, "firm_id");
    if firm_id.is_empty() {
        return Err("missing required field firm_id".into());
    }
    let year: i32 = {
        let s = cell(record, cols, "year");
        s.parse()
            .map_err(|_| format!("column year: unparseable integer {s:?}"))?
    };
    let month_num: u32 = {
        let s = cell(record, cols, "month");
        s.parse()
            .map_err(|_| format!("column month: unparseable integer {s:?}"))?
    };
    let month = CalendarMonth::new(year, month_num).map_err(|e| e.to_string())?;
    let rec = MonthlyReturnRecord {
        firm_id: firm_id.to_string(),
        month,
        total_return: required_f64(cell(record, cols, "total_return"), "total_return")?,
    };
    rec.check_invariants()?;
    Ok(rec)
}

/// Loads the benchmark factor series and checks gap-free coverage of
/// `window`, returning observations sorted ascending by month.
///
/// Rows outside the window are ignored. A month inside the window with no
/// complete row (absent, blank, or unparseable) is a [`PanelError::GapInSeries`].
pub fn load_factors(
    path: &Path,
    window: MonthWindow,
) -> Result<Vec<FactorObservation>, PanelError> {
    if window.start < earliest_supported_month() {
        return Err(PanelError::UnsupportedWindow {
            start: window.start,
        });
    }
    let mut reader = open_reader(path)?;
    let cols = column_indices(&mut reader, &FACTORS_COLUMNS)?;

    let mut by_month: BTreeMap<CalendarMonth, FactorObservation> = BTreeMap::new();
    let mut any_rows = false;
    for result in reader.records() {
        let record = result.map_err(PanelError::Csv)?;
        any_rows = true;
        let Ok(obs) = parse_factors_row(&record, &cols) else {
            // Incomplete row: the month it names (if any) stays uncovered.
            continue;
        };
        if !window.contains(&obs.month) {
            continue;
        }
        if by_month.contains_key(&obs.month) {
            return Err(PanelError::DuplicateKey {
                key: obs.month.to_string(),
            });
        }
        by_month.insert(obs.month, obs);
    }
    if !any_rows {
        return Err(PanelError::EmptyInput);
    }
    for month in window.iter() {
        if !by_month.contains_key(&month) {
            return Err(PanelError::GapInSeries { month });
        }
    }
    Ok(by_month.into_values().collect())
}

fn parse_factors_row(
    record: &csv::StringRecord,
    cols: &BTreeMap<String, usize>,
) -> Result<FactorObservation, String> {
    let year: i32 = cell(record, cols, "year")
        .parse()
        .map_err(|_| "bad year".to_string())?;
    let month_num: u32 = cell(record, cols, "month")
        .parse()
        .map_err(|_| "bad month".to_string())?;
    let month = CalendarMonth::new(year, month_num).map_err(|e| e.to_string())?;
    Ok(FactorObservation {
        month,
        mktrf: required_f64(cell(record, cols, "mktrf"), "mktrf")?,
        smb: required_f64(cell(record, cols, "smb"), "smb")?,
        hml: required_f64(cell(record, cols, "hml"), "hml")?,
        rmw: required_f64(cell(record, cols, "rmw"), "rmw")?,
        cma: required_f64(cell(record, cols, "cma"), "cma")?,
        umd: required_f64(cell(record, cols, "umd"), "umd")?,
        rf: required_f64(cell(record, cols, "rf"), "rf")?,
    })
}

/// Canonical decimal rendering used by every writer: shortest string that
/// round-trips through `f64` parsing.
pub fn fmt_number(x: f64) -> String {
    format!("{x}")
}

/// Writes fundamentals in canonical form (header + one row per record).
pub fn write_fundamentals<W: std::io::Write>(
    out: W,
    records: &[FirmYearRecord],
) -> Result<(), PanelError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FUNDAMENTALS_COLUMNS).map_err(PanelError::Csv)?;
    for r in records {
        w.write_record([
            r.firm_id.as_str(),
            &r.fiscal_year.to_string(),
            r.sic.as_str(),
            &fmt_number(r.revenue),
            &fmt_number(r.cogs),
            &fmt_number(r.sga_expense),
            &fmt_number(r.rd_expense),
            &fmt_number(r.interest_expense),
            &fmt_number(r.net_income),
            &fmt_number(r.total_assets),
            &fmt_number(r.total_assets_prior),
            &fmt_number(r.book_equity),
            &fmt_number(r.market_equity),
            &fmt_number(r.market_equity_june),
            &r.ltg.map(fmt_number).unwrap_or_default(),
            &r.exchange.to_string(),
        ])
        .map_err(PanelError::Csv)?;
    }
    w.flush().map_err(|e| PanelError::Io(e.to_string()))?;
    Ok(())
}

/// Writes returns in canonical form.
pub fn write_returns<W: std::io::Write>(
    out: W,
    records: &[MonthlyReturnRecord],
) -> Result<(), PanelError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RETURNS_COLUMNS).map_err(PanelError::Csv)?;
    for r in records {
        w.write_record([
            r.firm_id.as_str(),
            &r.month.year().to_string(),
            &r.month.month().to_string(),
            &fmt_number(r.total_return),
        ])
        .map_err(PanelError::Csv)?;
    }
    w.flush().map_err(|e| PanelError::Io(e.to_string()))?;
    Ok(())
}

/// Writes factor observations in canonical form.
pub fn write_factors<W: std::io::Write>(
    out: W,
    records: &[FactorObservation],
) -> Result<(), PanelError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FACTORS_COLUMNS).map_err(PanelError::Csv)?;
    for r in records {
        w.write_record([
            r.month.year().to_string(),
            r.month.month().to_string(),
            fmt_number(r.mktrf),
            fmt_number(r.smb),
            fmt_number(r.hml),
            fmt_number(r.rmw),
            fmt_number(r.cma),
            fmt_number(r.umd),
            fmt_number(r.rf),
        ])
        .map_err(PanelError::Csv)?;
    }
    w.flush().map_err(|e| PanelError::Io(e.to_string()))?;
    Ok(())
}
