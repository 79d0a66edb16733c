//! Derived firm-level variables: MTB, ROE, intensity ratios, operating
//! profitability, tech classification, the SG&A investment component, and
//! the intangible-intensity ratio INTAN.

pub mod sga;
pub mod tech;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::panel::{FirmYearRecord, Panel};
use crate::stats::{two_sample_test, StatsError};

pub use sga::{
    compute_intan, fit_sga_model, sga_investment_component, FallbackLevel, SgaFits, SgaInputs,
    SgaModelFit,
};
pub use tech::{classify_tech, TECH_SIC_PREFIXES};

/// Errors from variable derivation.
#[derive(Debug, Error)]
pub enum FundamentalsError {
    #[error("malformed SIC code {sic:?} (need 2-4 digits)")]
    MalformedSic { sic: String },
    #[error("fiscal year {year} has {n} usable firm-years, below the minimum group size {needed}")]
    NoUsableFit { year: i32, n: usize, needed: usize },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Derived variables for one firm-year.
///
/// Ratios that need positive book equity (`mtb`, `roe`, `op`) or positive
/// revenue (`rd_intensity`, `sga_intensity`) are absent when their
/// denominator is unusable; `intan` is always defined because the loader
/// guarantees positive average total assets.
#[derive(Debug, Clone)]
pub struct DerivedFirmYear {
    pub firm_id: String,
    pub fiscal_year: i32,
    pub mtb: Option<f64>,
    pub roe: Option<f64>,
    pub rd_intensity: Option<f64>,
    pub sga_intensity: Option<f64>,
    pub op: Option<f64>,
    pub intan: f64,
    pub is_tech: bool,
    pub sga_investment_component: f64,
    /// Analyst long-term growth, carried through for LTG sorts.
    pub ltg: Option<f64>,
}

/// One excluded or degraded firm-year, for the diagnostics side-file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationDiagnostic {
    pub firm_id: String,
    pub fiscal_year: i32,
    pub exclusion_reason: String,
}

/// Output of [`derive_all`]: derived records, the fitted SG&A model set, and
/// exclusion diagnostics.
#[derive(Debug, Clone)]
pub struct Derived {
    pub records: Vec<DerivedFirmYear>,
    pub sga_fits: SgaFits,
    pub diagnostics: Vec<DerivationDiagnostic>,
}

impl Derived {
    /// Index of derived records by (firm_id, fiscal_year).
    pub fn by_firm_year(&self) -> BTreeMap<(&str, i32), &DerivedFirmYear> {
        self.records
            .iter()
            .map(|d| ((d.firm_id.as_str(), d.fiscal_year), d))
            .collect()
    }
}

/// Derives every firm-level variable for all eligible firm-years in the
/// panel.
///
/// Fits the SG&A model (minimum group size `sga_min_group`, SIC3 with SIC2
/// and year-pooled fallbacks) and computes the investment component and
/// INTAN per record. Ineligible rows are excluded with diagnostics; rows
/// with nonpositive book equity keep their record but lose MTB/ROE/OP.
pub fn derive_all(panel: &Panel, sga_min_group: usize) -> Result<Derived, FundamentalsError> {
    let mut eligible: Vec<&FirmYearRecord> = Vec::new();
    let mut inputs: Vec<SgaInputs> = Vec::new();
    let mut diagnostics: Vec<DerivationDiagnostic> = Vec::new();

    for rec in panel.fundamentals() {
        let avg_assets = rec.average_total_assets();
        if avg_assets.is_nan() || avg_assets <= 0.0 {
            diagnostics.push(DerivationDiagnostic {
                firm_id: rec.firm_id.clone(),
                fiscal_year: rec.fiscal_year,
                exclusion_reason: "nonpositive average total assets".into(),
            });
            continue;
        }
        if classify_tech(&rec.sic).is_err() {
            diagnostics.push(DerivationDiagnostic {
                firm_id: rec.firm_id.clone(),
                fiscal_year: rec.fiscal_year,
                exclusion_reason: format!("malformed SIC {:?}", rec.sic),
            });
            continue;
        }
        let prior_revenue = panel
            .fundamentals_for(&rec.firm_id, rec.fiscal_year - 1)
            .map(|prev| prev.revenue);
        eligible.push(rec);
        inputs.push(SgaInputs::from_record(rec, prior_revenue));
    }

    let sga_fits = fit_sga_model(&eligible, &inputs, sga_min_group)?;

    let mut records = Vec::with_capacity(eligible.len());
    for (rec, inp) in eligible.iter().zip(inputs.iter()) {
        let fit = sga_fits
            .fit_for(&rec.firm_id, rec.fiscal_year)
            .expect("every eligible firm-year maps to one fit");
        let component = sga_investment_component(rec, inp, fit);
        let intan = compute_intan(rec, component);
        let is_tech = classify_tech(&rec.sic).expect("validated above");

        let (mtb, roe, op) = if rec.book_equity > 0.0 {
            (
                Some(rec.market_equity / rec.book_equity),
                Some(rec.net_income / rec.book_equity),
                Some(
                    (rec.revenue - rec.cogs - rec.sga_expense - rec.interest_expense)
                        / rec.book_equity,
                ),
            )
        } else {
            diagnostics.push(DerivationDiagnostic {
                firm_id: rec.firm_id.clone(),
                fiscal_year: rec.fiscal_year,
                exclusion_reason: "nonpositive book equity: MTB/ROE/OP undefined".into(),
            });
            (None, None, None)
        };
        let (rd_intensity, sga_intensity) = if rec.revenue > 0.0 {
            (
                Some(rec.rd_expense / rec.revenue),
                Some(rec.sga_expense / rec.revenue),
            )
        } else {
            diagnostics.push(DerivationDiagnostic {
                firm_id: rec.firm_id.clone(),
                fiscal_year: rec.fiscal_year,
                exclusion_reason: "nonpositive revenue: RD/SGA intensity undefined".into(),
            });
            (None, None)
        };

        records.push(DerivedFirmYear {
            firm_id: rec.firm_id.clone(),
            fiscal_year: rec.fiscal_year,
            mtb,
            roe,
            rd_intensity,
            sga_intensity,
            op,
            intan,
            is_tech,
            sga_investment_component: component,
            ltg: rec.ltg,
        });
    }

    Ok(Derived {
        records,
        sga_fits,
        diagnostics,
    })
}

/// Symmetric percentile clamp of the derived ratios, applied per fiscal-year
/// cross-section. `pct` is the lower tail in percent (e.g. 1.0 clamps to the
/// [1st, 99th] percentiles). Off by default; the study config enables it.
pub fn winsorize(records: &mut [DerivedFirmYear], pct: f64) {
    assert!((0.0..50.0).contains(&pct), "winsor percentile out of range");
    let years: std::collections::BTreeSet<i32> =
        records.iter().map(|d| d.fiscal_year).collect();
    for year in years {
        for field in 0..6usize {
            let get = |d: &DerivedFirmYear| -> Option<f64> {
                match field {
                    0 => d.mtb,
                    1 => d.roe,
                    2 => d.rd_intensity,
                    3 => d.sga_intensity,
                    4 => d.op,
                    _ => Some(d.intan),
                }
            };
            let mut values: Vec<f64> = records
                .iter()
                .filter(|d| d.fiscal_year == year)
                .filter_map(get)
                .collect();
            if values.len() < 3 {
                continue;
            }
            values.sort_by(|a, b| a.partial_cmp(b).expect("finite ratio"));
            let lo = crate::factors::percentile(&values, pct);
            let hi = crate::factors::percentile(&values, 100.0 - pct);
            for d in records.iter_mut().filter(|d| d.fiscal_year == year) {
                let clamp = |v: Option<f64>| v.map(|x| x.clamp(lo, hi));
                match field {
                    0 => d.mtb = clamp(d.mtb),
                    1 => d.roe = clamp(d.roe),
                    2 => d.rd_intensity = clamp(d.rd_intensity),
                    3 => d.sga_intensity = clamp(d.sga_intensity),
                    4 => d.op = clamp(d.op),
                    _ => d.intan = d.intan.clamp(lo, hi),
                }
            }
        }
    }
}

/// Firm grouping for descriptive statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    All,
    Tech,
    NonTech,
}

impl std::fmt::Display for Grouping {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Grouping::All => "all",
            Grouping::Tech => "tech",
            Grouping::NonTech => "nontech",
        };
        f.write_str(s)
    }
}

/// The descriptive variables reported per group and period.
pub const DESCRIPTIVE_VARIABLES: [&str; 5] = ["MTB", "ROE", "RD", "SGA", "INTAN"];

/// Location statistics of one variable within one period.
#[derive(Debug, Clone, Copy)]
pub struct LocationStats {
    pub mean: f64,
    pub median: f64,
    pub n: usize,
}

/// One descriptive-table row: a variable's two-period comparison.
#[derive(Debug, Clone)]
pub struct DescriptiveRow {
    pub variable: String,
    pub early: LocationStats,
    pub late: LocationStats,
    /// Welch t for late minus early (positive = the variable rose).
    pub t_value: f64,
    /// Rank-sum z for late minus early.
    pub z_value: f64,
}

/// Mean and median of MTB, ROE, RD, SGA, INTAN for one firm group across two
/// fiscal-year periods, with Welch t and rank-sum z comparing the periods
/// (late minus early).
pub fn descriptive_table(
    derived: &[DerivedFirmYear],
    grouping: Grouping,
    early_years: std::ops::RangeInclusive<i32>,
    late_years: std::ops::RangeInclusive<i32>,
) -> Result<Vec<DescriptiveRow>, FundamentalsError> {
    let in_group = |d: &DerivedFirmYear| match grouping {
        Grouping::All => true,
        Grouping::Tech => d.is_tech,
        Grouping::NonTech => !d.is_tech,
    };
    let value_of = |d: &DerivedFirmYear, variable: &str| -> Option<f64> {
        match variable {
            "MTB" => d.mtb,
            "ROE" => d.roe,
            "RD" => d.rd_intensity,
            "SGA" => d.sga_intensity,
            "INTAN" => Some(d.intan),
            _ => None,
        }
    };

    let mut rows = Vec::with_capacity(DESCRIPTIVE_VARIABLES.len());
    for variable in DESCRIPTIVE_VARIABLES {
        let collect = |years: &std::ops::RangeInclusive<i32>| -> Vec<f64> {
            derived
                .iter()
                .filter(|d| in_group(d) && years.contains(&d.fiscal_year))
                .filter_map(|d| value_of(d, variable))
                .collect()
        };
        let early = collect(&early_years);
        let late = collect(&late_years);
        let test = two_sample_test(&late, &early)?;
        rows.push(DescriptiveRow {
            variable: variable.to_string(),
            early: LocationStats {
                mean: test.mean_b,
                median: test.median_b,
                n: test.n_b,
            },
            late: LocationStats {
                mean: test.mean_a,
                median: test.median_a,
                n: test.n_a,
            },
            t_value: test.t_value,
            z_value: test.z_value,
        });
    }
    Ok(rows)
}
