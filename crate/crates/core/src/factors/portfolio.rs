//! Monthly return series for sorted portfolios.

use std::collections::BTreeMap;

use crate::panel::{CalendarMonth, Panel};

use super::{FactorError, Weighting};

/// Monthly return series for one sorted portfolio, with its annual
/// membership for audit.
///
/// Months where no member firm has a return are omitted, so the series may
/// be shorter than the panel window; `excess_returns[i]` equals
/// `returns[i] - rf[i]` exactly.
#[derive(Debug, Clone)]
pub struct PortfolioSeries {
    pub label: String,
    pub months: Vec<CalendarMonth>,
    pub returns: Vec<f64>,
    pub excess_returns: Vec<f64>,
    /// formation (holding) year -> member firm ids.
    pub memberships: BTreeMap<i32, Vec<String>>,
    pub weighting: Weighting,
}

impl PortfolioSeries {
    /// True when the series covers every month of the panel window it was
    /// built over.
    pub fn covers(&self, months: &[CalendarMonth]) -> bool {
        self.months == months
    }
}

/// Builds the monthly (excess) return series for one portfolio.
///
/// `memberships` maps each holding calendar year to the firms held that
/// year: the 12 months of year `y` average the members formed on fiscal-year
/// `y - 1` values. Value weights use each member's end-of-prior-year market
/// equity; firms with a missing month contribute nothing that month.
pub fn portfolio_returns(
    label: impl Into<String>,
    memberships: &BTreeMap<i32, Vec<String>>,
    panel: &Panel,
    weighting: Weighting,
) -> Result<PortfolioSeries, FactorError> {
    // Resolve member weights once per holding year.
    let mut weighted_by_year: BTreeMap<i32, Vec<(usize, f64)>> = BTreeMap::new();
    for (&year, firm_ids) in memberships {
        let mut weighted = Vec::with_capacity(firm_ids.len());
        for firm_id in firm_ids {
            let Some(firm_idx) = panel.firm_index(firm_id) else {
                continue;
            };
            let weight = match weighting {
                Weighting::Equal => 1.0,
                Weighting::Value => {
                    // End-of-prior-calendar-year market equity; skip firms
                    // without a usable weight.
                    match panel.fundamentals_for(firm_id, year - 1) {
                        Some(rec) if rec.market_equity > 0.0 => rec.market_equity,
                        _ => continue,
                    }
                }
            };
            weighted.push((firm_idx, weight));
        }
        weighted_by_year.insert(year, weighted);
    }

    let mut months = Vec::new();
    let mut returns = Vec::new();
    let mut excess = Vec::new();
    for (midx, month) in panel.months().iter().enumerate() {
        let Some(weighted) = weighted_by_year.get(&month.year()) else {
            continue;
        };
        let mut weighted_sum = 0.0;
        let mut weight_sum = 0.0;
        for (firm_idx, w) in weighted {
            if let Some(r) = panel.total_return(*firm_idx, midx) {
                weighted_sum += w * r;
                weight_sum += w;
            }
        }
        if weight_sum > 0.0 {
            let r = weighted_sum / weight_sum;
            months.push(*month);
            returns.push(r);
            excess.push(r - panel.factors()[midx].rf);
        }
    }

    Ok(PortfolioSeries {
        label: label.into(),
        months,
        returns,
        excess_returns: excess,
        memberships: memberships.clone(),
        weighting,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{
        build_panel, Exchange, FactorObservation, FirmYearRecord, MonthWindow,
        MonthlyReturnRecord, OrphanPolicy,
    };
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn firm(id: &str, fy: i32, market_equity: f64) -> FirmYearRecord {
        FirmYearRecord {
            firm_id: id.to_string(),
            fiscal_year: fy,
            sic: "2834".into(),
            revenue: 100.0,
            cogs: 40.0,
            sga_expense: 30.0,
            rd_expense: 1.0,
            interest_expense: 1.0,
            net_income: 5.0,
            total_assets: 100.0,
            total_assets_prior: 100.0,
            book_equity: 50.0,
            market_equity,
            market_equity_june: market_equity,
            ltg: None,
            exchange: Exchange::Nyse,
        }
    }

    fn panel_with_returns(returns: Vec<MonthlyReturnRecord>, firms: Vec<FirmYearRecord>) -> Panel {
        let window: MonthWindow = "2000-01..2000-03".parse().unwrap();
        let factors = window
            .iter()
            .map(|month| FactorObservation {
                month,
                mktrf: 0.0,
                smb: 0.0,
                hml: 0.0,
                rmw: 0.0,
                cma: 0.0,
                umd: 0.0,
                rf: 0.001,
            })
            .collect();
        build_panel(firms, returns, factors, window, OrphanPolicy::Fatal).unwrap()
    }

    fn ret(id: &str, month: &str, r: f64) -> MonthlyReturnRecord {
        MonthlyReturnRecord {
            firm_id: id.to_string(),
            month: month.parse().unwrap(),
            total_return: r,
        }
    }

    #[test]
    fn single_firm_portfolio_equals_that_firm() {
        let panel = panel_with_returns(
            vec![
                ret("A", "2000-01", 0.02),
                ret("A", "2000-02", -0.01),
                ret("A", "2000-03", 0.04),
            ],
            vec![firm("A", 1999, 100.0)],
        );
        let mut memberships = BTreeMap::new();
        memberships.insert(2000, vec!["A".to_string()]);
        let series = portfolio_returns("solo", &memberships, &panel, Weighting::Equal).unwrap();
        assert_eq!(series.returns, vec![0.02, -0.01, 0.04]);
        // Excess-return identity: the stored excess is exactly return - rf.
        for (e, r) in series.excess_returns.iter().zip(series.returns.iter()) {
            assert_eq!(*e, *r - 0.001);
        }
    }

    #[test]
    fn two_firm_equal_weight_mean() {
        let panel = panel_with_returns(
            vec![
                ret("A", "2000-01", 0.02),
                ret("B", "2000-01", 0.04),
                ret("A", "2000-02", 0.02),
            ],
            vec![firm("A", 1999, 100.0), firm("B", 1999, 300.0)],
        );
        let mut memberships = BTreeMap::new();
        memberships.insert(2000, vec!["A".to_string(), "B".to_string()]);
        let series = portfolio_returns("pair", &memberships, &panel, Weighting::Equal).unwrap();
        assert_relative_eq!(series.returns[0], 0.03, max_relative = 1e-12);
        // B is missing in February: the mean is over A alone.
        assert_relative_eq!(series.returns[1], 0.02, max_relative = 1e-12);

        let vw = portfolio_returns("pair", &memberships, &panel, Weighting::Value).unwrap();
        assert_relative_eq!(
            vw.returns[0],
            (100.0 * 0.02 + 300.0 * 0.04) / 400.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn random_portfolio_matches_brute_force() {
        let mut rng = StdRng::seed_from_u64(77);
        let n = 50;
        let firms: Vec<FirmYearRecord> = (0..n)
            .map(|i| firm(&format!("F{i:02}"), 1999, rng.random_range(10.0..500.0)))
            .collect();
        let window: MonthWindow = "2000-01..2000-03".parse().unwrap();
        let mut returns = Vec::new();
        let mut table: BTreeMap<(String, CalendarMonth), f64> = BTreeMap::new();
        for month in window.iter() {
            for i in 0..n {
                let r = rng.random_range(-0.2..0.3);
                returns.push(MonthlyReturnRecord {
                    firm_id: format!("F{i:02}"),
                    month,
                    total_return: r,
                });
                table.insert((format!("F{i:02}"), month), r);
            }
        }
        let panel = panel_with_returns(returns, firms.clone());
        let mut memberships = BTreeMap::new();
        memberships.insert(
            2000,
            (0..n).map(|i| format!("F{i:02}")).collect::<Vec<_>>(),
        );
        let series = portfolio_returns("all", &memberships, &panel, Weighting::Value).unwrap();

        // Independent summation oracle over the raw records.
        for (idx, month) in window.iter().enumerate() {
            let mut num = 0.0;
            let mut den = 0.0;
            for f in &firms {
                let w = f.market_equity;
                num += w * table[&(f.firm_id.clone(), month)];
                den += w;
            }
            assert_relative_eq!(series.returns[idx], num / den, max_relative = 1e-12);
        }
    }
}
