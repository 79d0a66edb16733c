//! Canonical data model: fundamentals, returns, and factor series loaded,
//! validated, and aligned into an immutable [`Panel`].

pub mod load;
pub mod month;
pub mod records;

use std::collections::BTreeMap;
use std::path::PathBuf;

use thiserror::Error;

pub use load::{
    earliest_supported_month, fmt_number, load_factors, load_fundamentals, load_returns,
    write_factors, write_fundamentals, write_returns, LoadOptions, Loaded, QuarantinedRow,
    FACTORS_COLUMNS, FUNDAMENTALS_COLUMNS, RETURNS_COLUMNS,
};
pub use month::{CalendarMonth, MonthError, MonthWindow};
pub use records::{Exchange, FactorObservation, FirmYearRecord, MonthlyReturnRecord};

/// Errors raised while loading or assembling panel data.
#[derive(Debug, Error)]
pub enum PanelError {
    #[error("cannot read {path}: {source}")]
    FileUnreadable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("schema mismatch: missing column {column:?}")]
    SchemaMismatch { column: String },
    #[error("input contains no data rows")]
    EmptyInput,
    #[error("duplicate key {key}")]
    DuplicateKey { key: String },
    #[error("factor series has no observation for {month}")]
    GapInSeries { month: CalendarMonth },
    #[error("row {row} rejected in strict mode: {reason}")]
    RowRejected { row: u64, reason: String },
    #[error("{} return firms missing from fundamentals (first: {})",
            firms.len(), firms.first().map(String::as_str).unwrap_or("?"))]
    OrphanReturns { firms: Vec<String> },
    #[error("window starts {start}, before the earliest supported factor month 1963-07")]
    UnsupportedWindow { start: CalendarMonth },
    #[error("csv error: {0}")]
    Csv(csv::Error),
    #[error("io error: {0}")]
    Io(String),
}

/// How [`build_panel`] treats return records for firms absent from the
/// fundamentals file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrphanPolicy {
    /// Any orphan return is fatal.
    #[default]
    Fatal,
    /// Orphans are dropped and reported in [`PanelDiagnostics`].
    Tolerate,
}

/// Side report produced while assembling a panel.
#[derive(Debug, Clone, Default)]
pub struct PanelDiagnostics {
    /// Distinct return firms absent from fundamentals, sorted.
    pub orphan_firms: Vec<String>,
    /// Return rows dropped because their firm was an orphan.
    pub orphan_rows_dropped: usize,
    /// Return rows outside the study window.
    pub out_of_window_rows: usize,
}

/// Immutable, aligned study data: fundamentals, a dense firm-by-month return
/// matrix over the window, and the gap-free factor series.
///
/// All accessors hand out read-only views; nothing mutates a constructed
/// panel.
#[derive(Debug, Clone)]
pub struct Panel {
    window: MonthWindow,
    months: Vec<CalendarMonth>,
    firms: Vec<String>,
    firm_index: BTreeMap<String, usize>,
    fundamentals: Vec<FirmYearRecord>,
    // firm -> fiscal_year -> index into `fundamentals`
    fundamentals_index: BTreeMap<String, BTreeMap<i32, usize>>,
    // row-major [firm][month]; NaN marks a missing month
    returns: Vec<f64>,
    factors: Vec<FactorObservation>,
    diagnostics: PanelDiagnostics,
}

impl Panel {
    pub fn window(&self) -> MonthWindow {
        self.window
    }

    /// Months of the window, ascending.
    pub fn months(&self) -> &[CalendarMonth] {
        &self.months
    }

    /// Firm identifiers with at least one fundamentals record, sorted.
    pub fn firms(&self) -> &[String] {
        &self.firms
    }

    pub fn firm_index(&self, firm_id: &str) -> Option<usize> {
        self.firm_index.get(firm_id).copied()
    }

    pub fn fundamentals(&self) -> &[FirmYearRecord] {
        &self.fundamentals
    }

    /// The fundamentals record of `firm_id` for `fiscal_year`, if any.
    pub fn fundamentals_for(&self, firm_id: &str, fiscal_year: i32) -> Option<&FirmYearRecord> {
        let idx = self.fundamentals_index.get(firm_id)?.get(&fiscal_year)?;
        Some(&self.fundamentals[*idx])
    }

    /// Total return of firm `firm_idx` in the `month_idx`-th window month.
    pub fn total_return(&self, firm_idx: usize, month_idx: usize) -> Option<f64> {
        let value = self.returns[firm_idx * self.months.len() + month_idx];
        (!value.is_nan()).then_some(value)
    }

    /// Factor observations aligned with `months()`.
    pub fn factors(&self) -> &[FactorObservation] {
        &self.factors
    }

    /// One factor column over the window, by canonical name.
    pub fn factor_column(&self, name: &str) -> Option<Vec<f64>> {
        if !records::FACTOR_COLUMNS.contains(&name) {
            return None;
        }
        Some(
            self.factors
                .iter()
                .map(|o| o.get(name).expect("known column"))
                .collect(),
        )
    }

    pub fn diagnostics(&self) -> &PanelDiagnostics {
        &self.diagnostics
    }
}

/// Aligns validated inputs into a [`Panel`].
///
/// Factor observations must cover `window` with no gaps; returns outside the
/// window are excluded; orphan returns follow `orphans`.
pub fn build_panel(
    fundamentals: Vec<FirmYearRecord>,
    returns: Vec<MonthlyReturnRecord>,
    factors: Vec<FactorObservation>,
    window: MonthWindow,
    orphans: OrphanPolicy,
) -> Result<Panel, PanelError> {
    let months: Vec<CalendarMonth> = window.iter().collect();

    let mut by_month: BTreeMap<CalendarMonth, FactorObservation> = BTreeMap::new();
    for obs in factors {
        if !window.contains(&obs.month) {
            continue;
        }
        if by_month.insert(obs.month, obs).is_some() {
            return Err(PanelError::DuplicateKey {
                key: obs.month.to_string(),
            });
        }
    }
    for m in &months {
        if !by_month.contains_key(m) {
            return Err(PanelError::GapInSeries { month: *m });
        }
    }
    let factors: Vec<FactorObservation> = by_month.into_values().collect();

    let mut firm_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut fundamentals_index: BTreeMap<String, BTreeMap<i32, usize>> = BTreeMap::new();
    for (i, rec) in fundamentals.iter().enumerate() {
        let next = firm_index.len();
        firm_index.entry(rec.firm_id.clone()).or_insert(next);
        fundamentals_index
            .entry(rec.firm_id.clone())
            .or_default()
            .insert(rec.fiscal_year, i);
    }
    // Re-number firms in sorted order for deterministic indexing.
    let firms: Vec<String> = firm_index.keys().cloned().collect();
    for (i, f) in firms.iter().enumerate() {
        firm_index.insert(f.clone(), i);
    }

    let mut grid: Vec<f64> = vec![f64::NAN; firms.len() * months.len()];
    let mut diagnostics = PanelDiagnostics::default();
    let mut orphan_set: BTreeMap<String, ()> = BTreeMap::new();
    for r in &returns {
        let Some(midx) = window.index_of(&r.month) else {
            diagnostics.out_of_window_rows += 1;
            continue;
        };
        match firm_index.get(&r.firm_id) {
            Some(&fidx) => grid[fidx * months.len() + midx] = r.total_return,
            None => {
                orphan_set.insert(r.firm_id.clone(), ());
                diagnostics.orphan_rows_dropped += 1;
            }
        }
    }
    diagnostics.orphan_firms = orphan_set.into_keys().collect();
    if !diagnostics.orphan_firms.is_empty() && orphans == OrphanPolicy::Fatal {
        return Err(PanelError::OrphanReturns {
            firms: diagnostics.orphan_firms,
        });
    }

    Ok(Panel {
        window,
        months,
        firms,
        firm_index,
        fundamentals,
        fundamentals_index,
        returns: grid,
        factors,
        diagnostics,
    })
}
