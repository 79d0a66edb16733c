//! Ground-truth sidecar for generated panels: planted loadings, SG&A
//! coefficients, and expected portfolio compositions.
//!
//! Memberships are computed here from the generator's own data with an
//! independent re-implementation of the ranking conventions (NYSE median,
//! 30/70 INTAN terciles, remainder-to-lowest quantile bins), so the engine's
//! sort logic can be checked against this file rather than against itself.
//! They are exact whenever `sga_noise_sd = 0`; with noise the engine's
//! estimated INTAN can deviate from the planted value by the fit error.

use std::collections::BTreeMap;

use crate::panel::{fmt_number, Exchange, FirmYearRecord};

use super::spec::{SynthSpec, LOADABLE_FACTORS};
use super::FirmProfile;

/// One membership fact: firm x year x sort label -> bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleMembership {
    pub firm_id: String,
    /// Formation year for INTANFT cells; holding year for quantile bins
    /// (numerically the same year key: fiscal year + 1).
    pub year: i32,
    /// "intanft_cell", "mtb_q5", "intan_q5", "intan_q4", "op_q5", "ltg_q5".
    pub label: String,
    /// Cell name ("S/H") or 1-based bin ("1" = lowest).
    pub value: String,
}

/// The planted ground truth emitted next to generated panels.
#[derive(Debug, Clone)]
pub struct OracleReport {
    /// firm -> loadings on (mktrf, smb, hml, rmw, cma, umd).
    pub loadings: Vec<(String, Vec<f64>)>,
    /// 3-digit SIC -> planted (alpha, beta, gamma, lambda).
    pub sga_coefficients: Vec<(String, [f64; 4])>,
    pub memberships: Vec<OracleMembership>,
    pub idio_vol: f64,
}

impl OracleReport {
    /// Long-form CSV: record_type,key1,key2,name,value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("record_type,key1,key2,name,value\n");
        for (firm, betas) in &self.loadings {
            for (name, beta) in LOADABLE_FACTORS.iter().zip(betas) {
                out.push_str(&format!("loading,{firm},,beta_{name},{}\n", fmt_number(*beta)));
            }
        }
        out.push_str(&format!("param,,,idio_vol,{}\n", fmt_number(self.idio_vol)));
        for (sic, coeffs) in &self.sga_coefficients {
            for (name, value) in ["alpha", "beta", "gamma", "lambda"].iter().zip(coeffs) {
                out.push_str(&format!("sga,{sic},,{name},{}\n", fmt_number(*value)));
            }
        }
        for m in &self.memberships {
            out.push_str(&format!(
                "membership,{},{},{},{}\n",
                m.firm_id, m.year, m.label, m.value
            ));
        }
        out
    }

    /// Parses the long-form CSV back (the inverse of [`Self::to_csv`]).
    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut loadings: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
        let mut sga: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
        let mut memberships = Vec::new();
        let mut idio_vol = 0.0;
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.splitn(5, ',').collect();
            if parts.len() != 5 {
                return Err(format!("oracle line {}: expected 5 fields", i + 1));
            }
            match parts[0] {
                "loading" => {
                    let beta: f64 = parts[4].parse().map_err(|e| format!("line {}: {e}", i + 1))?;
                    loadings
                        .entry(parts[1].to_string())
                        .or_default()
                        .push((parts[3].to_string(), beta));
                }
                "param" => {
                    if parts[3] == "idio_vol" {
                        idio_vol = parts[4].parse().map_err(|e| format!("line {}: {e}", i + 1))?;
                    }
                }
                "sga" => {
                    let v: f64 = parts[4].parse().map_err(|e| format!("line {}: {e}", i + 1))?;
                    sga.entry(parts[1].to_string())
                        .or_default()
                        .push((parts[3].to_string(), v));
                }
                "membership" => {
                    memberships.push(OracleMembership {
                        firm_id: parts[1].to_string(),
                        year: parts[2].parse().map_err(|e| format!("line {}: {e}", i + 1))?,
                        label: parts[3].to_string(),
                        value: parts[4].to_string(),
                    });
                }
                other => return Err(format!("line {}: unknown record type {other:?}", i + 1)),
            }
        }
        let loadings = loadings
            .into_iter()
            .map(|(firm, named)| {
                let by_name: BTreeMap<String, f64> = named.into_iter().collect();
                let betas = LOADABLE_FACTORS
                    .iter()
                    .map(|n| by_name[&format!("beta_{n}")])
                    .collect();
                (firm, betas)
            })
            .collect();
        let sga_coefficients = sga
            .into_iter()
            .map(|(sic, named)| {
                let by_name: BTreeMap<String, f64> = named.into_iter().collect();
                (
                    sic,
                    [
                        by_name["alpha"],
                        by_name["beta"],
                        by_name["gamma"],
                        by_name["lambda"],
                    ],
                )
            })
            .collect();
        Ok(OracleReport {
            loadings,
            sga_coefficients,
            memberships,
            idio_vol,
        })
    }

    /// Memberships of one label for one year: firm -> bin value.
    pub fn membership_map(&self, label: &str, year: i32) -> BTreeMap<&str, &str> {
        self.memberships
            .iter()
            .filter(|m| m.label == label && m.year == year)
            .map(|m| (m.firm_id.as_str(), m.value.as_str()))
            .collect()
    }
}

// Independent ranking helpers (deliberately not shared with the factors
// module).

fn oracle_percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = p / 100.0 * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

fn quantile_bins(ranked: &mut Vec<(&str, f64)>, n_bins: usize) -> Vec<(String, usize)> {
    ranked.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite").then(a.0.cmp(b.0)));
    let n = ranked.len();
    let base = n / n_bins;
    let rem = n % n_bins;
    let mut out = Vec::with_capacity(n);
    let mut cursor = 0;
    for bin in 0..n_bins {
        let size = base + usize::from(bin < rem);
        for (firm, _) in &ranked[cursor..cursor + size] {
            out.push(((*firm).to_string(), bin + 1));
        }
        cursor += size;
    }
    out
}

pub(super) fn build_report(
    spec: &SynthSpec,
    profiles: &[FirmProfile],
    rows: &[(FirmYearRecord, Option<&'static str>)],
    intan_true: &BTreeMap<(usize, i32), f64>,
    fy_first: i32,
    fy_last: i32,
) -> OracleReport {
    let loadings = profiles
        .iter()
        .map(|p| (p.firm_id.clone(), p.betas.clone()))
        .collect();
    let sic_codes = spec.industry_sic_codes();
    let sga_coefficients = sic_codes
        .iter()
        .enumerate()
        .map(|(i, sic)| (sic.clone(), spec.sga_coeffs(i)))
        .collect();

    let firm_index: BTreeMap<&str, usize> = profiles
        .iter()
        .enumerate()
        .map(|(i, p)| (p.firm_id.as_str(), i))
        .collect();

    // Engine-visible records by fiscal year (skip rows the loader drops).
    let mut by_year: BTreeMap<i32, Vec<&FirmYearRecord>> = BTreeMap::new();
    for (rec, blank) in rows {
        let dropped = matches!(blank, Some(col) if super::is_required_column(col));
        if !dropped {
            by_year.entry(rec.fiscal_year).or_default().push(rec);
        }
    }

    let mut memberships = Vec::new();
    for fiscal_year in fy_first..=fy_last {
        let year = fiscal_year + 1; // formation / holding year
        let Some(records) = by_year.get(&fiscal_year) else {
            continue;
        };
        let intan_of = |rec: &FirmYearRecord| -> f64 {
            intan_true[&(firm_index[rec.firm_id.as_str()], fiscal_year)]
        };

        // 2x3 INTANFT cells: NYSE median size, 30/70 INTAN terciles over
        // NYSE firms (the engine's default convention).
        let mut nyse_caps: Vec<f64> = records
            .iter()
            .filter(|r| r.exchange == Exchange::Nyse && r.market_equity_june > 0.0)
            .map(|r| r.market_equity_june)
            .collect();
        let mut nyse_intan: Vec<f64> = records
            .iter()
            .filter(|r| r.exchange == Exchange::Nyse && r.market_equity_june > 0.0)
            .map(|r| intan_of(r))
            .collect();
        if !nyse_caps.is_empty() && nyse_intan.len() >= 3 {
            nyse_caps.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            nyse_intan.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let median = oracle_percentile(&nyse_caps, 50.0);
            let low = oracle_percentile(&nyse_intan, 30.0);
            let high = oracle_percentile(&nyse_intan, 70.0);
            for rec in records.iter().filter(|r| r.market_equity_june > 0.0) {
                let size = if rec.market_equity_june <= median { "S" } else { "B" };
                let intan = intan_of(rec);
                let tercile = if intan <= low {
                    "L"
                } else if intan <= high {
                    "M"
                } else {
                    "H"
                };
                memberships.push(OracleMembership {
                    firm_id: rec.firm_id.clone(),
                    year,
                    label: "intanft_cell".into(),
                    value: format!("{size}/{tercile}"),
                });
            }
        }

        // Quantile sorts on prior-year values.
        type ValueOf<'a> = Box<dyn Fn(&FirmYearRecord) -> Option<f64> + 'a>;
        let sorts: [(&str, usize, ValueOf<'_>); 5] = [
            (
                "mtb_q5",
                5,
                Box::new(|r: &FirmYearRecord| {
                    (r.book_equity > 0.0).then(|| r.market_equity / r.book_equity)
                }),
            ),
            ("intan_q5", 5, Box::new(|r: &FirmYearRecord| Some(intan_of(r)))),
            ("intan_q4", 4, Box::new(|r: &FirmYearRecord| Some(intan_of(r)))),
            (
                "op_q5",
                5,
                Box::new(|r: &FirmYearRecord| {
                    (r.book_equity > 0.0).then(|| {
                        (r.revenue - r.cogs - r.sga_expense - r.interest_expense) / r.book_equity
                    })
                }),
            ),
            ("ltg_q5", 5, Box::new(|r: &FirmYearRecord| r.ltg)),
        ];
        for (label, n_bins, value_of) in sorts {
            let mut ranked: Vec<(&str, f64)> = records
                .iter()
                .filter_map(|r| value_of(r).map(|v| (r.firm_id.as_str(), v)))
                .collect();
            if ranked.len() < n_bins {
                continue;
            }
            for (firm, bin) in quantile_bins(&mut ranked, n_bins) {
                memberships.push(OracleMembership {
                    firm_id: firm,
                    year,
                    label: label.to_string(),
                    value: bin.to_string(),
                });
            }
        }
    }

    OracleReport {
        loadings,
        sga_coefficients,
        memberships,
        idio_vol: spec.idio_vol,
    }
}
