//! The SG&A investment-component model: per-industry-year regressions of
//! scaled SG&A on scaled revenues and decline/loss dummies, with a fallback
//! ladder for thin groups.

use std::collections::BTreeMap;

use crate::panel::FirmYearRecord;
use crate::stats::{ols, StatsError};

use super::FundamentalsError;

/// Estimation level actually used for a group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FallbackLevel {
    Sic3,
    Sic2,
    YearPooled,
}

impl std::fmt::Display for FallbackLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FallbackLevel::Sic3 => "SIC3",
            FallbackLevel::Sic2 => "SIC2",
            FallbackLevel::YearPooled => "YEAR_POOLED",
        };
        f.write_str(s)
    }
}

/// One fitted SG&A model: SG&A = alpha + beta·Revenues + gamma·Revenue_Decrease
/// + lambda·Loss, with SG&A and Revenues scaled by average total assets.
///
/// A dummy column with no within-group variation is dropped from the fit and
/// its coefficient reported as exactly 0.
#[derive(Debug, Clone)]
pub struct SgaModelFit {
    /// SIC prefix that defined the estimation group; empty for a year-pooled
    /// fit.
    pub industry: String,
    pub year: i32,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub n_obs: usize,
    pub fallback_level: FallbackLevel,
    /// Standard errors aligned with (alpha, beta, gamma, lambda); 0 for
    /// dropped columns.
    pub std_errors: [f64; 4],
}

impl SgaModelFit {
    /// Predicted scaled SG&A for one firm-year's model inputs.
    pub fn predict_scaled(&self, inputs: &SgaInputs) -> f64 {
        self.alpha
            + self.beta * inputs.revenue_scaled
            + self.gamma * inputs.revenue_decrease
            + self.lambda * inputs.loss
    }
}

/// Per-firm-year regression inputs, scaled by average total assets.
#[derive(Debug, Clone, Copy)]
pub struct SgaInputs {
    pub sga_scaled: f64,
    pub revenue_scaled: f64,
    /// 1 iff revenue fell versus the same firm's prior fiscal year; 0 when no
    /// prior-year record exists.
    pub revenue_decrease: f64,
    /// 1 iff net income is negative.
    pub loss: f64,
}

impl SgaInputs {
    /// Builds model inputs from a record and the firm's prior-year revenue
    /// (when known). Requires positive average total assets.
    pub fn from_record(record: &FirmYearRecord, prior_revenue: Option<f64>) -> Self {
        let avg_assets = record.average_total_assets();
        SgaInputs {
            sga_scaled: record.sga_expense / avg_assets,
            revenue_scaled: record.revenue / avg_assets,
            revenue_decrease: match prior_revenue {
                Some(prev) if record.revenue < prev => 1.0,
                _ => 0.0,
            },
            loss: if record.net_income < 0.0 { 1.0 } else { 0.0 },
        }
    }
}

/// The fitted model set plus the fit each firm-year maps to.
#[derive(Debug, Clone)]
pub struct SgaFits {
    pub fits: Vec<SgaModelFit>,
    /// (firm_id, fiscal_year) -> index into `fits`. Every eligible firm-year
    /// maps to exactly one fit.
    pub assignment: BTreeMap<(String, i32), usize>,
}

impl SgaFits {
    pub fn fit_for(&self, firm_id: &str, fiscal_year: i32) -> Option<&SgaModelFit> {
        self.assignment
            .get(&(firm_id.to_string(), fiscal_year))
            .map(|i| &self.fits[*i])
    }
}

fn sic_prefix(sic: &str, len: usize) -> String {
    sic.chars().take(len).collect()
}

/// Fits the SG&A model by 3-digit SIC industry and fiscal year.
///
/// Groups with fewer than `min_group` firm-years fall back to their 2-digit
/// SIC group, then to a year-pooled fit over all firms that year. A year
/// whose total eligible count is below `min_group` is an error.
pub fn fit_sga_model(
    records: &[&FirmYearRecord],
    inputs: &[SgaInputs],
    min_group: usize,
) -> Result<SgaFits, FundamentalsError> {
    assert_eq!(records.len(), inputs.len());
    let min_group = min_group.max(6); // 4 parameters need at least n >= k + 2

    // year -> sic3 -> row indices
    let mut by_year: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, rec) in records.iter().enumerate() {
        by_year.entry(rec.fiscal_year).or_default().push(i);
    }

    let mut fits: Vec<SgaModelFit> = Vec::new();
    let mut assignment: BTreeMap<(String, i32), usize> = BTreeMap::new();

    for (&year, rows) in &by_year {
        if rows.len() < min_group {
            return Err(FundamentalsError::NoUsableFit {
                year,
                n: rows.len(),
                needed: min_group,
            });
        }
        let mut by_sic3: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut by_sic2: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for &i in rows {
            by_sic3
                .entry(sic_prefix(&records[i].sic, 3))
                .or_default()
                .push(i);
            by_sic2
                .entry(sic_prefix(&records[i].sic, 2))
                .or_default()
                .push(i);
        }

        let mut fit_cache: BTreeMap<(FallbackLevel, String), Option<usize>> = BTreeMap::new();
        let mut year_pooled_idx: Option<usize> = None;

        for &i in rows {
            let sic3 = sic_prefix(&records[i].sic, 3);
            let sic2 = sic_prefix(&records[i].sic, 2);

            let mut chosen: Option<usize> = None;
            for (level, prefix, members) in [
                (FallbackLevel::Sic3, &sic3, by_sic3.get(&sic3)),
                (FallbackLevel::Sic2, &sic2, by_sic2.get(&sic2)),
            ] {
                let members = members.expect("group exists by construction");
                if members.len() < min_group {
                    continue;
                }
                let key = (level, prefix.clone());
                let cached = fit_cache.entry(key).or_insert_with(|| {
                    fit_group(inputs, members, prefix, year, level)
                        .map(|fit| {
                            fits.push(fit);
                            fits.len() - 1
                        })
                        .ok()
                });
                if let Some(idx) = *cached {
                    chosen = Some(idx);
                    break;
                }
            }
            if chosen.is_none() {
                if year_pooled_idx.is_none() {
                    // The final rung: a failure here is a genuine numeric
                    // problem, not a thin group.
                    let fit = fit_group(inputs, rows, "", year, FallbackLevel::YearPooled)?;
                    fits.push(fit);
                    year_pooled_idx = Some(fits.len() - 1);
                }
                chosen = year_pooled_idx;
            }
            assignment.insert(
                (records[i].firm_id.clone(), year),
                chosen.expect("fit chosen or error returned"),
            );
        }
    }

    Ok(SgaFits { fits, assignment })
}

/// Fits one group, dropping dummy columns without within-group variation.
fn fit_group(
    inputs: &[SgaInputs],
    members: &[usize],
    industry: &str,
    year: i32,
    level: FallbackLevel,
) -> Result<SgaModelFit, StatsError> {
    let y: Vec<f64> = members.iter().map(|&i| inputs[i].sga_scaled).collect();
    let revenue: Vec<f64> = members.iter().map(|&i| inputs[i].revenue_scaled).collect();
    let decrease: Vec<f64> = members
        .iter()
        .map(|&i| inputs[i].revenue_decrease)
        .collect();
    let loss: Vec<f64> = members.iter().map(|&i| inputs[i].loss).collect();

    // Columns without within-group variation are collinear with the
    // intercept; drop them and report their coefficient as exactly 0.
    let varies = |xs: &[f64]| xs.iter().any(|v| *v != xs[0]);
    let candidates: [&[f64]; 3] = [&revenue, &decrease, &loss];
    let used: Vec<bool> = candidates.iter().map(|c| varies(c)).collect();
    let columns: Vec<&[f64]> = candidates
        .iter()
        .zip(&used)
        .filter(|(_, keep)| **keep)
        .map(|(c, _)| *c)
        .collect();

    let fit = ols(&y, &columns, true)?;
    let mut coef_iter = fit.coefficients.iter().copied();
    let mut se_iter = fit.std_errors.iter().copied();
    let alpha = coef_iter.next().unwrap_or(0.0);
    let se_alpha = se_iter.next().unwrap_or(0.0);
    let mut coeffs = [0.0f64; 3];
    let mut ses = [0.0f64; 3];
    for (j, keep) in used.iter().enumerate() {
        if *keep {
            coeffs[j] = coef_iter.next().unwrap_or(0.0);
            ses[j] = se_iter.next().unwrap_or(0.0);
        }
    }

    Ok(SgaModelFit {
        industry: industry.to_string(),
        year,
        alpha,
        beta: coeffs[0],
        gamma: coeffs[1],
        lambda: coeffs[2],
        n_obs: members.len(),
        fallback_level: level,
        std_errors: [se_alpha, ses[0], ses[1], ses[2]],
    })
}

/// Investment component of SG&A: (actual scaled SG&A - predicted scaled
/// SG&A) x average total assets. May be negative.
pub fn sga_investment_component(
    record: &FirmYearRecord,
    inputs: &SgaInputs,
    fit: &SgaModelFit,
) -> f64 {
    (inputs.sga_scaled - fit.predict_scaled(inputs)) * record.average_total_assets()
}

/// Intangible investment intensity: (R&D + SG&A investment component) over
/// average total assets.
pub fn compute_intan(record: &FirmYearRecord, sga_component: f64) -> f64 {
    (record.rd_expense + sga_component) / record.average_total_assets()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::Exchange;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, Normal};

    fn record(
        firm: &str,
        year: i32,
        sic: &str,
        revenue: f64,
        sga: f64,
        net_income: f64,
        assets: f64,
    ) -> FirmYearRecord {
        FirmYearRecord {
            firm_id: firm.to_string(),
            fiscal_year: year,
            sic: sic.to_string(),
            revenue,
            cogs: 0.4 * revenue,
            sga_expense: sga,
            rd_expense: 0.0,
            interest_expense: 0.0,
            net_income,
            total_assets: assets,
            total_assets_prior: assets,
            book_equity: 0.5 * assets,
            market_equity: assets,
            market_equity_june: assets,
            ltg: None,
            exchange: Exchange::Nyse,
        }
    }

    /// Generates one industry-year group from planted coefficients; the bool
    /// marks firm-years with a planted revenue decrease.
    fn planted_group(
        seed: u64,
        n: usize,
        sic: &str,
        year: i32,
        coeffs: (f64, f64, f64, f64),
        noise_sd: f64,
    ) -> Vec<(FirmYearRecord, bool)> {
        let (alpha, beta, gamma, lambda) = coeffs;
        let mut rng = StdRng::seed_from_u64(seed);
        let noise = Normal::new(0.0, noise_sd).unwrap();
        (0..n)
            .map(|i| {
                let assets = rng.random_range(50.0..500.0);
                let rev_scaled: f64 = rng.random_range(0.4..1.8);
                let decreased = rng.random_bool(0.3);
                let loss = rng.random_bool(0.25);
                let sga_scaled = alpha
                    + beta * rev_scaled
                    + gamma * f64::from(decreased)
                    + lambda * f64::from(loss)
                    + if noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                let rec = record(
                    &format!("F{i:04}"),
                    year,
                    sic,
                    rev_scaled * assets,
                    sga_scaled * assets,
                    if loss { -1.0 } else { 1.0 },
                    assets,
                );
                (rec, decreased)
            })
            .collect()
    }

    fn inputs_for(group: &[(FirmYearRecord, bool)]) -> Vec<SgaInputs> {
        group
            .iter()
            .map(|(r, decreased)| {
                let prior = if *decreased {
                    Some(r.revenue + 1.0)
                } else {
                    Some(r.revenue)
                };
                SgaInputs::from_record(r, prior)
            })
            .collect()
    }

    #[test]
    fn noiseless_group_recovers_exactly() {
        let coeffs = (0.1, 0.2, 0.05, 0.03);
        let group = planted_group(7, 60, "2834", 2000, coeffs, 0.0);
        let refs: Vec<&FirmYearRecord> = group.iter().map(|(r, _)| r).collect();
        let inputs = inputs_for(&group);
        let fits = fit_sga_model(&refs, &inputs, 15).unwrap();
        assert_eq!(fits.fits.len(), 1);
        let fit = &fits.fits[0];
        assert_eq!(fit.fallback_level, FallbackLevel::Sic3);
        assert_relative_eq!(fit.alpha, 0.1, max_relative = 1e-9);
        assert_relative_eq!(fit.beta, 0.2, max_relative = 1e-9);
        assert_relative_eq!(fit.gamma, 0.05, max_relative = 1e-9);
        assert_relative_eq!(fit.lambda, 0.03, max_relative = 1e-9);
    }

    #[test]
    fn noisy_group_recovers_within_three_se() {
        let coeffs = (0.1, 0.2, 0.05, 0.03);
        let group = planted_group(11, 200, "3571", 2001, coeffs, 0.02);
        let refs: Vec<&FirmYearRecord> = group.iter().map(|(r, _)| r).collect();
        let inputs = inputs_for(&group);
        let fits = fit_sga_model(&refs, &inputs, 15).unwrap();
        let fit = &fits.fits[0];
        let planted = [coeffs.0, coeffs.1, coeffs.2, coeffs.3];
        let fitted = [fit.alpha, fit.beta, fit.gamma, fit.lambda];
        for j in 0..4 {
            assert!(
                (fitted[j] - planted[j]).abs() <= 3.0 * fit.std_errors[j],
                "coefficient {j}: {} vs planted {} (se {})",
                fitted[j],
                planted[j],
                fit.std_errors[j]
            );
        }
    }

    #[test]
    fn under_threshold_group_falls_back_to_sic2() {
        // 4 firms in SIC 283, 20 in SIC 285: SIC3 groups are 4 and 20, the
        // 2-digit group "28" has 24.
        let mut group = planted_group(3, 4, "2834", 2000, (0.1, 0.2, 0.05, 0.03), 0.01);
        let mut more = planted_group(4, 20, "2851", 2000, (0.1, 0.2, 0.05, 0.03), 0.01);
        for (i, (rec, _)) in more.iter_mut().enumerate() {
            rec.firm_id = format!("G{i:04}");
        }
        group.extend(more);
        let refs: Vec<&FirmYearRecord> = group.iter().map(|(r, _)| r).collect();
        let inputs = inputs_for(&group);
        let fits = fit_sga_model(&refs, &inputs, 15).unwrap();
        let fit_283 = fits.fit_for("F0000", 2000).unwrap();
        assert_eq!(fit_283.fallback_level, FallbackLevel::Sic2);
        assert_eq!(fit_283.industry, "28");
        // The large SIC3 group keeps its own fit.
        let fit_285 = fits
            .assignment
            .iter()
            .find(|((_, _), idx)| fits.fits[**idx].industry == "285")
            .map(|(_, idx)| &fits.fits[*idx])
            .expect("285 fit exists");
        assert_eq!(fit_285.fallback_level, FallbackLevel::Sic3);
    }

    #[test]
    fn thin_year_is_no_usable_fit() {
        let group = planted_group(5, 4, "2834", 1999, (0.1, 0.2, 0.0, 0.0), 0.01);
        let refs: Vec<&FirmYearRecord> = group.iter().map(|(r, _)| r).collect();
        let inputs = inputs_for(&group);
        let err = fit_sga_model(&refs, &inputs, 15).unwrap_err();
        assert!(matches!(
            err,
            FundamentalsError::NoUsableFit { year: 1999, .. }
        ));
    }

    #[test]
    fn constant_dummy_columns_are_dropped() {
        // No firm loses money and none decreases revenue: gamma and lambda
        // must come back exactly 0 and the fit must still succeed.
        let mut rng = StdRng::seed_from_u64(9);
        let records: Vec<FirmYearRecord> = (0..30)
            .map(|i| {
                let assets = 100.0;
                let rev: f64 = rng.random_range(40.0..180.0);
                record(
                    &format!("F{i:04}"),
                    2000,
                    "3571",
                    rev,
                    0.1 * assets + 0.2 * rev,
                    5.0,
                    assets,
                )
            })
            .collect();
        let refs: Vec<&FirmYearRecord> = records.iter().collect();
        let inputs: Vec<SgaInputs> = records
            .iter()
            .map(|r| SgaInputs::from_record(r, None))
            .collect();
        let fits = fit_sga_model(&refs, &inputs, 15).unwrap();
        let fit = &fits.fits[0];
        assert_eq!(fit.gamma, 0.0);
        assert_eq!(fit.lambda, 0.0);
        assert_relative_eq!(fit.alpha, 0.1 * 100.0 / 100.0, max_relative = 1e-9);
        assert_relative_eq!(fit.beta, 0.2, max_relative = 1e-9);
    }

    #[test]
    fn component_arithmetic() {
        // actual scaled 0.25, predicted 0.20, avg assets 200 -> 10.0
        let rec = record("F1", 2000, "2834", 100.0, 50.0, 5.0, 200.0);
        let inputs = SgaInputs::from_record(&rec, None);
        assert_eq!(inputs.sga_scaled, 0.25);
        let fit = SgaModelFit {
            industry: "283".into(),
            year: 2000,
            alpha: 0.20,
            beta: 0.0,
            gamma: 0.0,
            lambda: 0.0,
            n_obs: 20,
            fallback_level: FallbackLevel::Sic3,
            std_errors: [0.0; 4],
        };
        assert_relative_eq!(
            sga_investment_component(&rec, &inputs, &fit),
            10.0,
            max_relative = 1e-12
        );
        // actual = predicted -> 0
        let fit_exact = SgaModelFit {
            alpha: 0.25,
            ..fit.clone()
        };
        assert_relative_eq!(
            sga_investment_component(&rec, &inputs, &fit_exact),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn intan_definition_arithmetic() {
        // rd 10, component 10, avg assets 200 -> 0.10
        let mut rec = record("F1", 2000, "2834", 100.0, 50.0, 5.0, 200.0);
        rec.rd_expense = 10.0;
        assert_relative_eq!(compute_intan(&rec, 10.0), 0.10, max_relative = 1e-12);
        rec.rd_expense = 0.0;
        assert_eq!(compute_intan(&rec, 0.0), 0.0);
    }

    #[test]
    fn component_sums_vanish_within_fitted_groups() {
        let group = planted_group(21, 80, "3674", 2002, (0.12, 0.25, 0.04, 0.06), 0.03);
        let refs: Vec<&FirmYearRecord> = group.iter().map(|(r, _)| r).collect();
        let inputs = inputs_for(&group);
        let fits = fit_sga_model(&refs, &inputs, 15).unwrap();
        let fit = &fits.fits[0];
        let scaled_sum: f64 = refs
            .iter()
            .zip(inputs.iter())
            .map(|(r, inp)| sga_investment_component(r, inp, fit) / r.average_total_assets())
            .sum();
        assert!(scaled_sum.abs() < 1e-9, "scaled component sum {scaled_sum}");
    }
}
