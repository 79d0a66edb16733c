//! The intangible-intensity factor: a 2x3 size/INTAN double sort rebalanced
//! each June, long the two high-INTAN cells and short the two low-INTAN
//! cells.

use std::collections::BTreeMap;

use crate::fundamentals::Derived;
use crate::panel::{Exchange, MonthWindow, Panel};

use super::{formation_year_of, percentile, FactorError, FactorSeries, Weighting};

/// June formation breakpoints: the NYSE median market cap and the INTAN
/// tercile cutpoints.
#[derive(Debug, Clone, Copy)]
pub struct Breakpoints {
    pub size_median: f64,
    pub intan_low: f64,
    pub intan_high: f64,
    pub formation_year: i32,
}

/// Breakpoint configuration: tercile percentiles and the ranking universe.
#[derive(Debug, Clone, Copy)]
pub struct BreakpointConfig {
    pub low_pct: f64,
    pub high_pct: f64,
    /// Rank INTAN over NYSE firms only (the default) or the whole universe.
    pub nyse_only: bool,
}

impl Default for BreakpointConfig {
    fn default() -> Self {
        BreakpointConfig {
            low_pct: 30.0,
            high_pct: 70.0,
            nyse_only: true,
        }
    }
}

/// Full INTANFT construction options.
#[derive(Debug, Clone, Copy)]
pub struct IntanftConfig {
    pub breakpoints: BreakpointConfig,
    /// Within-cell weighting; value weights use formation-June market cap.
    pub weighting: Weighting,
}

impl Default for IntanftConfig {
    fn default() -> Self {
        IntanftConfig {
            breakpoints: BreakpointConfig::default(),
            weighting: Weighting::Value,
        }
    }
}

/// One firm's cell assignment for one formation year.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellMembership {
    pub formation_year: i32,
    pub cell: &'static str,
    pub firm_id: String,
}

/// The factor series plus the membership audit trail.
#[derive(Debug, Clone)]
pub struct IntanftOutput {
    pub series: FactorSeries,
    pub memberships: Vec<CellMembership>,
}

pub const CELL_LABELS: [&str; 6] = ["S/L", "S/M", "S/H", "B/L", "B/M", "B/H"];

/// Computes the June breakpoints for `formation_year` from fiscal-year
/// `formation_year - 1` records.
///
/// The size median is over NYSE firms' June market caps; INTAN cutpoints are
/// the configured percentiles of the ranking universe.
pub fn june_breakpoints(
    panel: &Panel,
    derived: &Derived,
    formation_year: i32,
    config: &BreakpointConfig,
) -> Result<Breakpoints, FactorError> {
    let fiscal_year = formation_year - 1;
    let derived_index = derived.by_firm_year();

    let mut nyse_caps: Vec<f64> = Vec::new();
    let mut intan_universe: Vec<f64> = Vec::new();
    for rec in panel.fundamentals() {
        if rec.fiscal_year != fiscal_year || rec.market_equity_june <= 0.0 {
            continue;
        }
        let Some(d) = derived_index.get(&(rec.firm_id.as_str(), fiscal_year)) else {
            continue;
        };
        let is_nyse = rec.exchange == Exchange::Nyse;
        if is_nyse {
            nyse_caps.push(rec.market_equity_june);
        }
        if is_nyse || !config.nyse_only {
            intan_universe.push(d.intan);
        }
    }
    if nyse_caps.is_empty() {
        return Err(FactorError::InsufficientUniverse {
            formation_year,
            detail: "no NYSE firm with June market cap".into(),
        });
    }
    if intan_universe.len() < 3 {
        return Err(FactorError::InsufficientUniverse {
            formation_year,
            detail: format!(
                "{} firms with INTAN in the ranking universe, need 3",
                intan_universe.len()
            ),
        });
    }
    nyse_caps.sort_by(|a, b| a.partial_cmp(b).expect("positive caps"));
    intan_universe.sort_by(|a, b| a.partial_cmp(b).expect("finite INTAN"));
    Ok(Breakpoints {
        size_median: percentile(&nyse_caps, 50.0),
        intan_low: percentile(&intan_universe, config.low_pct),
        intan_high: percentile(&intan_universe, config.high_pct),
        formation_year,
    })
}

fn cell_of(cap: f64, intan: f64, bp: &Breakpoints) -> &'static str {
    let small = cap <= bp.size_median;
    if intan <= bp.intan_low {
        if small { "S/L" } else { "B/L" }
    } else if intan <= bp.intan_high {
        if small { "S/M" } else { "B/M" }
    } else if small {
        "S/H"
    } else {
        "B/H"
    }
}

/// Builds INTANFT over `window`: each month, the simple average of the two
/// high-INTAN cell returns minus the average of the two low-INTAN cell
/// returns, portfolios formed each June and held July through June.
pub fn build_intanft(
    panel: &Panel,
    derived: &Derived,
    window: MonthWindow,
    config: &IntanftConfig,
) -> Result<IntanftOutput, FactorError> {
    let derived_index = derived.by_firm_year();
    let first_fy = formation_year_of(&window.start);
    let last_fy = formation_year_of(&window.end);

    // Per formation year, each cell's members as (firm index, weight).
    type CellMembers = BTreeMap<&'static str, Vec<(usize, f64)>>;
    let mut cells_by_fy: BTreeMap<i32, CellMembers> = BTreeMap::new();
    let mut memberships: Vec<CellMembership> = Vec::new();

    for fy in first_fy..=last_fy {
        let bp = june_breakpoints(panel, derived, fy, &config.breakpoints)?;
        let fiscal_year = fy - 1;
        let mut cells: BTreeMap<&'static str, Vec<(usize, f64)>> = BTreeMap::new();
        for rec in panel.fundamentals() {
            if rec.fiscal_year != fiscal_year || rec.market_equity_june <= 0.0 {
                continue;
            }
            let Some(d) = derived_index.get(&(rec.firm_id.as_str(), fiscal_year)) else {
                continue;
            };
            let Some(firm_idx) = panel.firm_index(&rec.firm_id) else {
                continue;
            };
            let cell = cell_of(rec.market_equity_june, d.intan, &bp);
            let weight = match config.weighting {
                Weighting::Equal => 1.0,
                Weighting::Value => rec.market_equity_june,
            };
            cells.entry(cell).or_default().push((firm_idx, weight));
            memberships.push(CellMembership {
                formation_year: fy,
                cell,
                firm_id: rec.firm_id.clone(),
            });
        }
        for label in CELL_LABELS {
            if cells.get(label).is_none_or(Vec::is_empty) {
                return Err(FactorError::EmptyCell {
                    formation_year: fy,
                    cell: label,
                    month: None,
                });
            }
        }
        cells_by_fy.insert(fy, cells);
    }

    let months: Vec<_> = window.iter().collect();
    let mut values = Vec::with_capacity(months.len());
    for (midx, month) in months.iter().enumerate() {
        let fy = formation_year_of(month);
        let cells = &cells_by_fy[&fy];
        let cell_return = |label: &'static str| -> Result<f64, FactorError> {
            let mut weighted_sum = 0.0;
            let mut weight_sum = 0.0;
            for (firm_idx, w) in &cells[label] {
                if let Some(r) = panel.total_return(*firm_idx, midx) {
                    weighted_sum += w * r;
                    weight_sum += w;
                }
            }
            if weight_sum <= 0.0 {
                return Err(FactorError::EmptyCell {
                    formation_year: fy,
                    cell: label,
                    month: Some(*month),
                });
            }
            Ok(weighted_sum / weight_sum)
        };
        let high = 0.5 * (cell_return("S/H")? + cell_return("B/H")?);
        let low = 0.5 * (cell_return("S/L")? + cell_return("B/L")?);
        values.push(high - low);
    }

    memberships.sort_by(|a, b| {
        (a.formation_year, a.cell, &a.firm_id).cmp(&(b.formation_year, b.cell, &b.firm_id))
    });
    Ok(IntanftOutput {
        series: FactorSeries::new("INTANFT", window, values),
        memberships,
    })
}
