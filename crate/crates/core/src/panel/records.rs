//! Canonical input record types: firm fundamentals, monthly returns, and
//! benchmark factor observations.

use std::fmt;
use std::str::FromStr;

use super::month::CalendarMonth;

/// Listing exchange of a firm. NYSE membership drives size breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exchange {
    Nyse,
    Amex,
    Nasdaq,
}

impl fmt::Display for Exchange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Exchange::Nyse => "NYSE",
            Exchange::Amex => "AMEX",
            Exchange::Nasdaq => "NASDAQ",
        };
        f.write_str(s)
    }
}

impl FromStr for Exchange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NYSE" => Ok(Exchange::Nyse),
            "AMEX" => Ok(Exchange::Amex),
            "NASDAQ" => Ok(Exchange::Nasdaq),
            other => Err(format!("unknown exchange {other:?}")),
        }
    }
}

/// One firm's fundamentals for one fiscal year.
///
/// `rd_expense` is materialized as exactly 0 when the source cell is blank;
/// `ltg` (analyst long-term growth) is the only genuinely optional field.
/// `market_equity_june` is the market cap in June of the calendar year summary
/// following `fiscal_year`, used for size breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct FirmYearRecord {
    pub firm_id: String,
    pub fiscal_year: i32,
    pub sic: String,
    pub revenue: f64,
    pub cogs: f64,
    pub sga_expense: f64,
    pub rd_expense: f64,
    pub interest_expense: f64,
    pub net_income: f64,
    pub total_assets: f64,
    pub total_assets_prior: f64,
    pub book_equity: f64,
    pub market_equity: f64,
    pub market_equity_june: f64,
    pub ltg: Option<f64>,
    pub exchange: Exchange,
}

impl FirmYearRecord {
    /// Mean of current and prior fiscal-year total assets.
    pub fn average_total_assets(&self) -> f64 {
        0.5 * (self.total_assets + self.total_assets_prior)
    }

    /// Checks the record-level invariants the loader enforces; returns the
    /// first violated invariant by name.
    pub fn check_invariants(&self) -> Result<(), String> {
        if !(2..=4).contains(&self.sic.len()) || !self.sic.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!(
                "sic must be a 2-4 digit string, got {:?}",
                self.sic
            ));
        }
        // NaN fails every bound check below.
        if self.total_assets.is_nan() || self.total_assets <= 0.0 {
            return Err(format!("total_assets must be > 0, got {}", self.total_assets));
        }
        if self.total_assets_prior.is_nan() || self.total_assets_prior <= 0.0 {
            return Err(format!(
                "total_assets_prior must be > 0, got {}",
                self.total_assets_prior
            ));
        }
        if self.rd_expense.is_nan() || self.rd_expense < 0.0 {
            return Err(format!("rd_expense must be >= 0, got {}", self.rd_expense));
        }
        Ok(())
    }
}

/// One firm's total return for one calendar month, as a decimal fraction
/// (0.01 = 1%).
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyReturnRecord {
    pub firm_id: String,
    pub month: CalendarMonth,
    pub total_return: f64,
}

impl MonthlyReturnRecord {
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.total_return.is_nan() || self.total_return <= -1.0 {
            return Err(format!(
                "total_return must be > -1, got {}",
                self.total_return
            ));
        }
        Ok(())
    }
}

/// One month of benchmark factor values, all decimal fractions per month.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorObservation {
    pub month: CalendarMonth,
    pub mktrf: f64,
    pub smb: f64,
    pub hml: f64,
    pub rmw: f64,
    pub cma: f64,
    pub umd: f64,
    pub rf: f64,
}

/// Names of the benchmark factor columns, in canonical file order.
pub const FACTOR_COLUMNS: [&str; 7] = ["mktrf", "smb", "hml", "rmw", "cma", "umd", "rf"];

impl FactorObservation {
    /// Value of the named column.
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "mktrf" => self.mktrf,
            "smb" => self.smb,
            "hml" => self.hml,
            "rmw" => self.rmw,
            "cma" => self.cma,
            "umd" => self.umd,
            "rf" => self.rf,
            _ => return None,
        })
    }
}
