//! Factor construction: the INTANFT 2x3 size/INTAN double sort, quantile
//! portfolio sorts, independent double sorts, and portfolio return series.

pub mod intanft;
pub mod portfolio;
pub mod sorts;

use thiserror::Error;

use crate::panel::{CalendarMonth, MonthWindow};

pub use intanft::{build_intanft, june_breakpoints, Breakpoints, CellMembership, IntanftOutput};
pub use portfolio::{portfolio_returns, PortfolioSeries};
pub use sorts::{independent_double_sort, quantile_sort, DoubleSort, QuantileSort, SortVariable};

/// Errors from factor construction and portfolio sorting.
#[derive(Debug, Error)]
pub enum FactorError {
    #[error("formation year {formation_year}: insufficient universe ({detail})")]
    InsufficientUniverse {
        formation_year: i32,
        detail: String,
    },
    #[error("formation year {formation_year}: cell {cell} has no members{}",
            month.map(|m| format!(" with returns in {m}")).unwrap_or_default())]
    EmptyCell {
        formation_year: i32,
        cell: &'static str,
        month: Option<CalendarMonth>,
    },
    #[error("variable {variable} unavailable for every firm in formation year {formation_year}")]
    MissingVariable {
        variable: &'static str,
        formation_year: i32,
    },
}

/// How returns are averaged within a portfolio or sort cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Simple average over member firms.
    #[default]
    Equal,
    /// Weighted by market capitalization (formation June cap for the INTANFT
    /// cells, end-of-prior-year cap for test portfolios).
    Value,
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Weighting::Equal => "equal",
            Weighting::Value => "value",
        })
    }
}

impl std::str::FromStr for Weighting {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "equal" => Ok(Weighting::Equal),
            "value" => Ok(Weighting::Value),
            other => Err(format!("unknown weighting {other:?} (equal|value)")),
        }
    }
}

/// A named monthly factor series, gap-free over its window.
#[derive(Debug, Clone)]
pub struct FactorSeries {
    pub name: String,
    pub months: Vec<CalendarMonth>,
    pub values: Vec<f64>,
}

impl FactorSeries {
    /// Builds a series over a contiguous window; `values` must cover every
    /// month.
    pub fn new(name: impl Into<String>, window: MonthWindow, values: Vec<f64>) -> Self {
        let months: Vec<CalendarMonth> = window.iter().collect();
        assert_eq!(
            months.len(),
            values.len(),
            "factor series must be gap-free over its window"
        );
        FactorSeries {
            name: name.into(),
            months,
            values,
        }
    }

    pub fn window(&self) -> MonthWindow {
        MonthWindow::new(self.months[0], *self.months.last().expect("non-empty"))
            .expect("months ascend")
    }

    /// Value at `month`, if covered.
    pub fn at(&self, month: &CalendarMonth) -> Option<f64> {
        let idx = month.months_since(&self.months[0]);
        if idx < 0 || idx as usize >= self.values.len() {
            return None;
        }
        Some(self.values[idx as usize])
    }

    /// The sub-series over `months` (all must be covered).
    pub fn subset(&self, months: &[CalendarMonth]) -> Vec<f64> {
        months
            .iter()
            .map(|m| self.at(m).expect("month covered by series"))
            .collect()
    }
}

/// Formation year owning a holding month: June of year t covers July(t)
/// through June(t+1).
pub fn formation_year_of(month: &CalendarMonth) -> i32 {
    if month.month() >= 7 {
        month.year()
    } else {
        month.year() - 1
    }
}

/// Percentile by linear interpolation between closest ranks, `p` in [0, 100].
/// `sorted` must be ascending and non-empty.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = p / 100.0 * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = rank - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}
