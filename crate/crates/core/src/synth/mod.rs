//! Seeded synthetic-panel generation with planted ground truth.
//!
//! Returns follow the planted linear-factor model
//! `r_it = sum_k beta_ik F_kt + eps_it + RF_t`; SG&A follows the
//! per-industry investment-component model with planted coefficients; every
//! draw comes from named ChaCha12 streams so a seed fully determines the
//! output bytes. Changing the generator or its distribution crate versions
//! is a breaking change for golden files.

mod oracle;
mod spec;

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use thiserror::Error;

use crate::panel::{
    fmt_number, CalendarMonth, Exchange, FactorObservation, FirmYearRecord, MonthlyReturnRecord,
    FUNDAMENTALS_COLUMNS,
};

pub use oracle::{OracleMembership, OracleReport};
pub use spec::{SynthSpec, FACTOR_NAMES, LOADABLE_FACTORS};

/// Errors from spec validation or generation.
#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// A generated panel: engine-visible records, rows destined for quarantine,
/// and the ground-truth sidecar.
#[derive(Debug, Clone)]
pub struct GeneratedPanel {
    /// Fundamentals the loader will accept, in file order, paired with the
    /// column blanked in the emitted file (None = clean row).
    rows: Vec<(FirmYearRecord, Option<&'static str>)>,
    pub returns: Vec<MonthlyReturnRecord>,
    pub factors: Vec<FactorObservation>,
    pub oracle: OracleReport,
}

impl GeneratedPanel {
    /// Fundamentals rows the loader will accept (rows with a blanked
    /// required column are excluded; they exist only in the emitted file).
    pub fn fundamentals(&self) -> Vec<FirmYearRecord> {
        self.rows
            .iter()
            .filter(|(_, blank)| !matches!(blank, Some(col) if is_required_column(col)))
            .map(|(rec, _)| rec.clone())
            .collect()
    }

    /// Writes fundamentals.csv, returns.csv, factors.csv, and oracle.csv
    /// under `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<(), SynthError> {
        std::fs::create_dir_all(dir)?;
        self.write_fundamentals_csv(&dir.join("fundamentals.csv"))?;
        let mut w = csv::Writer::from_path(dir.join("returns.csv"))?;
        w.write_record(["firm_id", "year", "month", "total_return"])?;
        for r in &self.returns {
            w.write_record([
                r.firm_id.as_str(),
                &r.month.year().to_string(),
                &r.month.month().to_string(),
                &fmt_number(r.total_return),
            ])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("factors.csv"))?;
        w.write_record(["year", "month", "mktrf", "smb", "hml", "rmw", "cma", "umd", "rf"])?;
        for o in &self.factors {
            w.write_record([
                o.month.year().to_string(),
                o.month.month().to_string(),
                fmt_number(o.mktrf),
                fmt_number(o.smb),
                fmt_number(o.hml),
                fmt_number(o.rmw),
                fmt_number(o.cma),
                fmt_number(o.umd),
                fmt_number(o.rf),
            ])?;
        }
        w.flush()?;

        std::fs::write(dir.join("oracle.csv"), self.oracle.to_csv())?;
        Ok(())
    }

    fn write_fundamentals_csv(&self, path: &Path) -> Result<(), SynthError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(FUNDAMENTALS_COLUMNS)?;
        for (r, blank) in &self.rows {
            let field = |name: &'static str, value: String| -> String {
                if *blank == Some(name) {
                    String::new()
                } else {
                    value
                }
            };
            w.write_record([
                r.firm_id.clone(),
                r.fiscal_year.to_string(),
                r.sic.clone(),
                field("revenue", fmt_number(r.revenue)),
                field("cogs", fmt_number(r.cogs)),
                field("sga_expense", fmt_number(r.sga_expense)),
                field("rd_expense", fmt_number(r.rd_expense)),
                field("interest_expense", fmt_number(r.interest_expense)),
                field("net_income", fmt_number(r.net_income)),
                field("total_assets", fmt_number(r.total_assets)),
                field("total_assets_prior", fmt_number(r.total_assets_prior)),
                field("book_equity", fmt_number(r.book_equity)),
                field("market_equity", fmt_number(r.market_equity)),
                field("market_equity_june", fmt_number(r.market_equity_june)),
                field("ltg", r.ltg.map(fmt_number).unwrap_or_default()),
                r.exchange.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn is_required_column(col: &str) -> bool {
    !matches!(col, "rd_expense" | "ltg")
}

/// Lower Cholesky factor of a symmetric positive-definite matrix, row-major.
fn cholesky(matrix: &[f64], n: usize) -> Result<Vec<f64>, SynthError> {
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = matrix[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(SynthError::InvalidSpec(
                        "factor correlation matrix is not positive definite".into(),
                    ));
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(l)
}

struct FirmProfile {
    firm_id: String,
    sic: String,
    industry: usize,
    exchange: Exchange,
    base_assets: f64,
    base_revenue: f64,
    cogs_share: f64,
    interest_share: f64,
    margin: f64,
    be_ratio: f64,
    mtb_mult: f64,
    rd_intensity: f64,
    ltg: f64,
    betas: Vec<f64>,
}

/// Generates a synthetic panel from `spec`. The same spec (and seed) always
/// produces byte-identical output.
pub fn generate(spec: &SynthSpec) -> Result<GeneratedPanel, SynthError> {
    spec.validate()?;

    // Named streams: reseeding one stage never disturbs the others.
    let mut rng_factors = ChaCha12Rng::seed_from_u64(spec.seed.wrapping_add(0xFAC7));
    let mut rng_firms = ChaCha12Rng::seed_from_u64(spec.seed.wrapping_add(0xF12A));
    let mut rng_years = ChaCha12Rng::seed_from_u64(spec.seed.wrapping_add(0xAEA2));
    let mut rng_returns = ChaCha12Rng::seed_from_u64(spec.seed.wrapping_add(0x2E72));
    let mut rng_missing = ChaCha12Rng::seed_from_u64(spec.seed.wrapping_add(0x3155));

    // --- factor series ---------------------------------------------------
    let months: Vec<CalendarMonth> = spec.window.iter().collect();
    let chol = cholesky(&spec.factor_corr, 7)?;
    let mut factors = Vec::with_capacity(months.len());
    for &month in &months {
        let z: Vec<f64> = (0..7)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng_factors))
            .collect();
        let mut x = [0.0f64; 7];
        for i in 0..7 {
            let mut acc = 0.0;
            for k in 0..=i {
                acc += chol[i * 7 + k] * z[k];
            }
            x[i] = spec.factor_means[i] + spec.factor_vols[i] * acc;
        }
        factors.push(FactorObservation {
            month,
            mktrf: x[0],
            smb: x[1],
            hml: x[2],
            rmw: x[3],
            cma: x[4],
            umd: x[5],
            rf: x[6],
        });
    }

    // --- firm profiles ----------------------------------------------------
    let sic_codes = spec.industry_sic_codes();
    let id_width = (spec.n_firms.max(2) as f64).log10().ceil() as usize + 1;
    let mut profiles: Vec<FirmProfile> = (0..spec.n_firms)
        .map(|i| {
            let industry = i % spec.n_industries;
            let exchange = if rng_firms.random_bool(spec.nyse_share) {
                Exchange::Nyse
            } else if rng_firms.random_bool(0.5) {
                Exchange::Amex
            } else {
                Exchange::Nasdaq
            };
            let sic = sic_codes[industry].clone();
            let is_tech = crate::fundamentals::classify_tech(&sic).expect("pool SICs are valid");
            let base_assets = (rng_firms.random_range(4.0f64..7.0)).exp();
            let rd_draw: f64 = Normal::new(spec.rd_intensity_mean, spec.rd_intensity_sd)
                .expect("validated sd")
                .sample(&mut rng_firms);
            FirmProfile {
                firm_id: format!("F{:0width$}", i, width = id_width),
                sic,
                industry,
                exchange,
                base_assets,
                base_revenue: base_assets * rng_firms.random_range(0.6..1.6),
                cogs_share: rng_firms.random_range(0.3..0.7),
                interest_share: rng_firms.random_range(0.0..0.04),
                margin: Normal::new(0.05, 0.07)
                    .expect("static sd")
                    .sample(&mut rng_firms),
                be_ratio: rng_firms.random_range(0.25..0.75),
                mtb_mult: (rng_firms.random_range(-0.3f64..1.2)).exp(),
                rd_intensity: rd_draw.max(0.0) * if is_tech { spec.tech_rd_multiplier } else { 1.0 },
                ltg: Normal::new(spec.ltg_mean, spec.ltg_sd)
                    .expect("validated sd")
                    .sample(&mut rng_firms),
                betas: Vec::new(),
            }
        })
        .collect();

    // --- firm-year fundamentals -------------------------------------------
    let fy_first = crate::factors::formation_year_of(&spec.window.start) - 1;
    let fy_last = crate::factors::formation_year_of(&spec.window.end) - 1;
    let sga_noise = Normal::new(0.0, spec.sga_noise_sd.max(f64::MIN_POSITIVE))
        .expect("validated sd");

    let mut rows: Vec<(FirmYearRecord, Option<&'static str>)> = Vec::new();
    // intan_true per (firm index, fiscal year), post-missingness.
    let mut intan_true: BTreeMap<(usize, i32), f64> = BTreeMap::new();

    for (fidx, profile) in profiles.iter().enumerate() {
        let mut assets = profile.base_assets;
        let mut prior_assets = profile.base_assets;
        let mut revenue = profile.base_revenue;
        let mut prior_revenue = None::<f64>;
        for fy in fy_first..=fy_last {
            if fy > fy_first {
                prior_assets = assets;
                assets *= 1.0 + rng_years.random_range(0.0..=spec.asset_growth_max.max(0.0));
                let prev = revenue;
                if spec.revenue_decrease_prob > 0.0
                    && rng_years.random_bool(spec.revenue_decrease_prob)
                {
                    revenue *= rng_years.random_range(0.85..0.98);
                } else {
                    revenue *= 1.0 + rng_years.random_range(0.0..=spec.revenue_growth_max.max(0.0));
                }
                prior_revenue = Some(prev);
            }
            let avg_assets = 0.5 * (assets + prior_assets);
            let revenue_decrease = match prior_revenue {
                Some(prev) if revenue < prev => 1.0,
                _ => 0.0,
            };
            let loss = if profile.margin < 0.0 { 1.0 } else { 0.0 };
            let coeffs = spec.sga_coeffs(profile.industry);
            let noise = if spec.sga_noise_sd > 0.0 {
                sga_noise.sample(&mut rng_years)
            } else {
                0.0
            };
            let sga_scaled = coeffs[0]
                + coeffs[1] * (revenue / avg_assets)
                + coeffs[2] * revenue_decrease
                + coeffs[3] * loss
                + noise;

            let mut rd_expense = profile.rd_intensity * revenue;
            let book_equity = profile.be_ratio * assets;
            let market_equity = profile.mtb_mult * book_equity;
            let june_jitter: f64 = if spec.june_cap_jitter_sd > 0.0 {
                Normal::new(0.0, spec.june_cap_jitter_sd)
                    .expect("validated sd")
                    .sample(&mut rng_years)
            } else {
                0.0
            };

            // Missingness draws, in fixed column order.
            let mut blank: Option<&'static str> = None;
            if spec.missing_rd_rate > 0.0 && rng_missing.random_bool(spec.missing_rd_rate) {
                blank = Some("rd_expense");
                rd_expense = 0.0; // what the loader will materialize
            }
            let mut ltg = Some(profile.ltg);
            if blank.is_none()
                && spec.missing_ltg_rate > 0.0
                && rng_missing.random_bool(spec.missing_ltg_rate)
            {
                blank = Some("ltg");
                ltg = None;
            }
            if blank.is_none()
                && spec.missing_required_rate > 0.0
                && rng_missing.random_bool(spec.missing_required_rate)
            {
                blank = Some(["book_equity", "total_assets", "revenue"][rng_missing.random_range(0..3)]);
            }

            let record = FirmYearRecord {
                firm_id: profile.firm_id.clone(),
                fiscal_year: fy,
                sic: profile.sic.clone(),
                revenue,
                cogs: profile.cogs_share * revenue,
                sga_expense: sga_scaled * avg_assets,
                rd_expense,
                interest_expense: profile.interest_share * revenue,
                net_income: profile.margin * revenue,
                total_assets: assets,
                total_assets_prior: prior_assets,
                book_equity,
                market_equity,
                market_equity_june: market_equity * (1.0 + june_jitter),
                ltg,
                exchange: profile.exchange,
            };
            // Planted intangible intensity: the model noise is the true
            // investment component (exactly the engine's residual when the
            // fits are exact, i.e. at sga_noise_sd = 0).
            intan_true.insert((fidx, fy), (rd_expense + noise * avg_assets) / avg_assets);
            rows.push((record, blank));
        }
    }

    // --- factor loadings, tilted by INTAN rank -----------------------------
    // Rank anchor: each firm's first-fiscal-year intangible intensity.
    let anchor: Vec<f64> = (0..spec.n_firms)
        .map(|fidx| intan_true[&(fidx, fy_first)])
        .collect();
    let pctile = percentile_ranks(&anchor);
    for (fidx, profile) in profiles.iter_mut().enumerate() {
        let tilt_pos = 2.0 * pctile[fidx] - 1.0;
        profile.betas = (0..6)
            .map(|k| {
                let noise: f64 = Normal::new(0.0, spec.loading_sds[k])
                    .expect("validated sd")
                    .sample(&mut rng_firms);
                spec.loading_means[k] + noise + spec.loading_intan_tilt[k] * tilt_pos
            })
            .collect();
    }

    // --- monthly returns ----------------------------------------------------
    let idio = Normal::new(0.0, spec.idio_vol.max(f64::MIN_POSITIVE)).expect("validated sd");
    let mut returns = Vec::with_capacity(spec.n_firms * months.len());
    for profile in &profiles {
        for (midx, &month) in months.iter().enumerate() {
            let obs = &factors[midx];
            let factor_part: f64 = profile
                .betas
                .iter()
                .zip([obs.mktrf, obs.smb, obs.hml, obs.rmw, obs.cma, obs.umd])
                .map(|(b, f)| b * f)
                .sum();
            let eps = if spec.idio_vol > 0.0 {
                idio.sample(&mut rng_returns)
            } else {
                0.0
            };
            returns.push(MonthlyReturnRecord {
                firm_id: profile.firm_id.clone(),
                month,
                total_return: factor_part + eps + obs.rf,
            });
        }
    }

    let oracle = oracle::build_report(spec, &profiles, &rows, &intan_true, fy_first, fy_last);

    Ok(GeneratedPanel {
        rows,
        returns,
        factors,
        oracle,
    })
}

/// Percentile rank in [0, 1] of each value within the slice, ties broken by
/// index for determinism.
fn percentile_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n == 1 {
        return vec![0.5];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .expect("finite values")
            .then(a.cmp(&b))
    });
    let mut ranks = vec![0.0; n];
    for (rank, &idx) in order.iter().enumerate() {
        ranks[idx] = rank as f64 / (n - 1) as f64;
    }
    ranks
}

/// Convenience for tests and examples: a small default spec with the given
/// seed.
pub fn quick_spec(seed: u64, n_firms: usize, window: &str) -> SynthSpec {
    SynthSpec {
        seed,
        n_firms,
        window: window.parse().expect("valid window literal"),
        ..SynthSpec::default()
    }
}
