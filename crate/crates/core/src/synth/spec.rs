//! Synthetic-panel specification: parsed from a flat key-value file,
//! validated, with documented defaults for every generation parameter.

use crate::kv::KvFile;
use crate::panel::MonthWindow;

use super::SynthError;

/// Factor columns in file order.
pub const FACTOR_NAMES: [&str; 7] = ["mktrf", "smb", "hml", "rmw", "cma", "umd", "rf"];

/// Factors firms load on (rf is added to every return, not loaded).
pub const LOADABLE_FACTORS: [&str; 6] = ["mktrf", "smb", "hml", "rmw", "cma", "umd"];

const TECH_SIC_POOL: [&str; 8] = ["283", "357", "366", "382", "384", "481", "486", "737"];
const NONTECH_SIC_POOL: [&str; 24] = [
    "201", "220", "245", "267", "291", "301", "331", "354", "371", "401", "421", "451", "508",
    "521", "541", "581", "602", "631", "701", "721", "753", "791", "801", "821",
];

/// All generation parameters. A seed plus a spec fully determines output.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub n_firms: usize,
    pub window: MonthWindow,
    pub seed: u64,

    /// Means of (mktrf, smb, hml, rmw, cma, umd, rf), decimal per month.
    pub factor_means: Vec<f64>,
    /// Monthly volatilities of the seven columns.
    pub factor_vols: Vec<f64>,
    /// 7x7 target correlation matrix, row-major.
    pub factor_corr: Vec<f64>,

    /// Per-factor loading distribution means (6 loadable factors).
    pub loading_means: Vec<f64>,
    pub loading_sds: Vec<f64>,
    /// Loading tilt by intangible-intensity percentile: beta_ik gains
    /// tilt_k * (2 p_i - 1) where p_i is the firm's INTAN percentile rank.
    pub loading_intan_tilt: Vec<f64>,
    /// Idiosyncratic monthly return volatility.
    pub idio_vol: f64,

    pub n_industries: usize,
    /// Share of industries drawn from the technology SIC pool.
    pub tech_share: f64,
    /// Planted SG&A coefficients (alpha, beta, gamma, lambda), each either
    /// one broadcast value or one value per industry.
    pub sga_alpha: Vec<f64>,
    pub sga_beta: Vec<f64>,
    pub sga_gamma: Vec<f64>,
    pub sga_lambda: Vec<f64>,
    /// Noise sd of the SG&A model (0 makes fits exact).
    pub sga_noise_sd: f64,

    pub rd_intensity_mean: f64,
    pub rd_intensity_sd: f64,
    pub tech_rd_multiplier: f64,
    pub ltg_mean: f64,
    pub ltg_sd: f64,

    /// Year-over-year dynamics; set all to 0 for constant fundamentals.
    pub revenue_decrease_prob: f64,
    pub revenue_growth_max: f64,
    pub asset_growth_max: f64,
    pub june_cap_jitter_sd: f64,

    pub nyse_share: f64,

    /// Missingness rates: blank cells in the emitted fundamentals file.
    pub missing_rd_rate: f64,
    pub missing_ltg_rate: f64,
    pub missing_required_rate: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        let mut factor_corr = vec![0.0; 49];
        for i in 0..7 {
            factor_corr[i * 7 + i] = 1.0;
        }
        SynthSpec {
            n_firms: 100,
            window: "1995-01..1999-12".parse().expect("static window"),
            seed: 0,
            factor_means: vec![0.006, 0.002, 0.003, 0.003, 0.002, 0.004, 0.003],
            factor_vols: vec![0.045, 0.030, 0.030, 0.022, 0.020, 0.040, 0.001],
            factor_corr,
            loading_means: vec![1.0, 0.4, 0.1, 0.0, 0.0, 0.0],
            loading_sds: vec![0.2, 0.2, 0.2, 0.15, 0.15, 0.15],
            loading_intan_tilt: vec![0.0; 6],
            idio_vol: 0.05,
            n_industries: 6,
            tech_share: 0.34,
            sga_alpha: vec![0.10],
            sga_beta: vec![0.20],
            sga_gamma: vec![0.05],
            sga_lambda: vec![0.03],
            sga_noise_sd: 0.02,
            rd_intensity_mean: 0.03,
            rd_intensity_sd: 0.03,
            tech_rd_multiplier: 3.0,
            ltg_mean: 0.15,
            ltg_sd: 0.08,
            revenue_decrease_prob: 0.25,
            revenue_growth_max: 0.12,
            asset_growth_max: 0.06,
            june_cap_jitter_sd: 0.05,
            nyse_share: 0.6,
            missing_rd_rate: 0.0,
            missing_ltg_rate: 0.0,
            missing_required_rate: 0.0,
        }
    }
}

impl SynthSpec {
    /// Parses a spec file; absent keys keep their defaults.
    pub fn from_kv(kv: &KvFile) -> Result<Self, SynthError> {
        const KNOWN_KEYS: [&str; 30] = [
            "n_firms",
            "seed",
            "window",
            "factor_means",
            "factor_vols",
            "factor_corr",
            "loading_means",
            "loading_sds",
            "loading_intan_tilt",
            "idio_vol",
            "n_industries",
            "tech_share",
            "sga_alpha",
            "sga_beta",
            "sga_gamma",
            "sga_lambda",
            "sga_noise_sd",
            "rd_intensity_mean",
            "rd_intensity_sd",
            "tech_rd_multiplier",
            "ltg_mean",
            "ltg_sd",
            "revenue_decrease_prob",
            "revenue_growth_max",
            "asset_growth_max",
            "june_cap_jitter_sd",
            "nyse_share",
            "missing_rd_rate",
            "missing_ltg_rate",
            "missing_required_rate",
        ];
        for key in kv.keys() {
            if !KNOWN_KEYS.contains(&key) {
                return Err(SynthError::InvalidSpec(format!("unknown spec key {key:?}")));
            }
        }
        let mut spec = SynthSpec::default();
        let bad = |e: crate::kv::KvError| SynthError::InvalidSpec(e.to_string());

        spec.n_firms = kv.get_or("n_firms", spec.n_firms).map_err(bad)?;
        spec.seed = kv.get_or("seed", spec.seed).map_err(bad)?;
        if let Some(w) = kv.get("window") {
            spec.window = w
                .parse()
                .map_err(|e| SynthError::InvalidSpec(format!("window: {e}")))?;
        }
        let list = |key: &str, slot: &mut Vec<f64>| -> Result<(), SynthError> {
            if let Some(values) = kv.get_f64_list(key).map_err(bad)? {
                *slot = values;
            }
            Ok(())
        };
        list("factor_means", &mut spec.factor_means)?;
        list("factor_vols", &mut spec.factor_vols)?;
        list("factor_corr", &mut spec.factor_corr)?;
        list("loading_means", &mut spec.loading_means)?;
        list("loading_sds", &mut spec.loading_sds)?;
        list("loading_intan_tilt", &mut spec.loading_intan_tilt)?;
        list("sga_alpha", &mut spec.sga_alpha)?;
        list("sga_beta", &mut spec.sga_beta)?;
        list("sga_gamma", &mut spec.sga_gamma)?;
        list("sga_lambda", &mut spec.sga_lambda)?;

        macro_rules! scalar {
            ($key:literal, $field:ident) => {
                spec.$field = kv.get_or($key, spec.$field).map_err(bad)?;
            };
        }
        scalar!("idio_vol", idio_vol);
        scalar!("n_industries", n_industries);
        scalar!("tech_share", tech_share);
        scalar!("sga_noise_sd", sga_noise_sd);
        scalar!("rd_intensity_mean", rd_intensity_mean);
        scalar!("rd_intensity_sd", rd_intensity_sd);
        scalar!("tech_rd_multiplier", tech_rd_multiplier);
        scalar!("ltg_mean", ltg_mean);
        scalar!("ltg_sd", ltg_sd);
        scalar!("revenue_decrease_prob", revenue_decrease_prob);
        scalar!("revenue_growth_max", revenue_growth_max);
        scalar!("asset_growth_max", asset_growth_max);
        scalar!("june_cap_jitter_sd", june_cap_jitter_sd);
        scalar!("nyse_share", nyse_share);
        scalar!("missing_rd_rate", missing_rd_rate);
        scalar!("missing_ltg_rate", missing_ltg_rate);
        scalar!("missing_required_rate", missing_required_rate);

        spec.validate()?;
        Ok(spec)
    }

    /// Checks every spec invariant.
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |m: String| Err(SynthError::InvalidSpec(m));
        if self.n_firms == 0 {
            return fail("n_firms must be positive".into());
        }
        if self.n_industries == 0 {
            return fail("n_industries must be positive".into());
        }
        if self.factor_means.len() != 7 || self.factor_vols.len() != 7 {
            return fail("factor_means and factor_vols need 7 entries".into());
        }
        if self.factor_corr.len() != 49 {
            return fail("factor_corr needs 49 row-major entries".into());
        }
        for i in 0..7 {
            if (self.factor_corr[i * 7 + i] - 1.0).abs() > 1e-12 {
                return fail("factor_corr diagonal must be 1".into());
            }
            for j in 0..7 {
                if (self.factor_corr[i * 7 + j] - self.factor_corr[j * 7 + i]).abs() > 1e-12 {
                    return fail("factor_corr must be symmetric".into());
                }
            }
        }
        for (name, xs) in [
            ("factor_vols", &self.factor_vols),
            ("loading_sds", &self.loading_sds),
        ] {
            if xs.iter().any(|v| *v < 0.0) {
                return fail(format!("{name} must be nonnegative"));
            }
        }
        if self.loading_means.len() != 6
            || self.loading_sds.len() != 6
            || self.loading_intan_tilt.len() != 6
        {
            return fail("loading parameters need 6 entries (mktrf..umd)".into());
        }
        for (name, v) in [
            ("idio_vol", self.idio_vol),
            ("sga_noise_sd", self.sga_noise_sd),
            ("rd_intensity_sd", self.rd_intensity_sd),
            ("ltg_sd", self.ltg_sd),
            ("june_cap_jitter_sd", self.june_cap_jitter_sd),
        ] {
            if v < 0.0 {
                return fail(format!("{name} must be nonnegative"));
            }
        }
        for (name, v) in [
            ("tech_share", self.tech_share),
            ("nyse_share", self.nyse_share),
            ("revenue_decrease_prob", self.revenue_decrease_prob),
            ("missing_rd_rate", self.missing_rd_rate),
            ("missing_ltg_rate", self.missing_ltg_rate),
            ("missing_required_rate", self.missing_required_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return fail(format!("{name} must be in [0, 1]"));
            }
        }
        for (name, xs) in [
            ("sga_alpha", &self.sga_alpha),
            ("sga_beta", &self.sga_beta),
            ("sga_gamma", &self.sga_gamma),
            ("sga_lambda", &self.sga_lambda),
        ] {
            if xs.len() != 1 && xs.len() != self.n_industries {
                return fail(format!(
                    "{name} needs 1 or n_industries = {} entries, got {}",
                    self.n_industries,
                    xs.len()
                ));
            }
        }
        let tech_count = self.tech_industry_count();
        if tech_count > TECH_SIC_POOL.len() {
            return fail(format!(
                "tech_share implies {tech_count} tech industries, pool has {}",
                TECH_SIC_POOL.len()
            ));
        }
        if self.n_industries - tech_count > NONTECH_SIC_POOL.len() {
            return fail(format!(
                "{} non-tech industries exceed the pool of {}",
                self.n_industries - tech_count,
                NONTECH_SIC_POOL.len()
            ));
        }
        Ok(())
    }

    pub fn tech_industry_count(&self) -> usize {
        (self.tech_share * self.n_industries as f64).round() as usize
    }

    /// Distinct 3-digit SIC codes per industry: tech industries first.
    pub fn industry_sic_codes(&self) -> Vec<String> {
        let tech_count = self.tech_industry_count();
        let mut codes: Vec<String> = TECH_SIC_POOL
            .iter()
            .take(tech_count)
            .map(|s| s.to_string())
            .collect();
        codes.extend(
            NONTECH_SIC_POOL
                .iter()
                .take(self.n_industries - tech_count)
                .map(|s| s.to_string()),
        );
        codes
    }

    /// Planted (alpha, beta, gamma, lambda) for one industry.
    pub fn sga_coeffs(&self, industry: usize) -> [f64; 4] {
        let pick = |xs: &Vec<f64>| {
            if xs.len() == 1 {
                xs[0]
            } else {
                xs[industry]
            }
        };
        [
            pick(&self.sga_alpha),
            pick(&self.sga_beta),
            pick(&self.sga_gamma),
            pick(&self.sga_lambda),
        ]
    }

    /// 6x6 covariance of the loadable factors implied by the spec.
    pub fn loadable_factor_covariance(&self) -> Vec<f64> {
        let mut cov = vec![0.0; 36];
        for i in 0..6 {
            for j in 0..6 {
                cov[i * 6 + j] =
                    self.factor_corr[i * 7 + j] * self.factor_vols[i] * self.factor_vols[j];
            }
        }
        cov
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SynthSpec::default().validate().unwrap();
    }

    #[test]
    fn kv_overrides_and_broadcast() {
        let kv = KvFile::parse(
            "n_firms = 250\nseed = 9\nwindow = 1994-01..1996-12\nsga_alpha = 0.1 0.2 0.3 0.4 0.5 0.6\nidio_vol = 0.04\n",
        )
        .unwrap();
        let spec = SynthSpec::from_kv(&kv).unwrap();
        assert_eq!(spec.n_firms, 250);
        assert_eq!(spec.window.len(), 36);
        assert_eq!(spec.sga_coeffs(2)[0], 0.3);
        assert_eq!(spec.sga_coeffs(2)[1], 0.2); // broadcast beta
        assert_eq!(spec.idio_vol, 0.04);
    }

    #[test]
    fn bad_specs_are_named() {
        let kv = KvFile::parse("tech_share = 1.5").unwrap();
        let err = SynthSpec::from_kv(&kv).unwrap_err();
        assert!(err.to_string().contains("tech_share"));

        let kv = KvFile::parse("sga_alpha = 0.1 0.2 0.3").unwrap();
        let err = SynthSpec::from_kv(&kv).unwrap_err();
        assert!(err.to_string().contains("sga_alpha"));
    }

    #[test]
    fn sic_codes_are_distinct_and_classified() {
        let spec = SynthSpec {
            n_industries: 10,
            tech_share: 0.4,
            ..SynthSpec::default()
        };
        let codes = spec.industry_sic_codes();
        assert_eq!(codes.len(), 10);
        let mut dedup = codes.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 10);
        let tech = codes
            .iter()
            .filter(|c| crate::fundamentals::classify_tech(c).unwrap())
            .count();
        assert_eq!(tech, 4);
    }
}
