//! Per-window study state: the aligned panel, derived variables, the raw
//! and orthogonalized INTANFT series, and the benchmark factors as series.

use std::collections::BTreeMap;

use crate::factors::intanft::IntanftConfig;
use crate::factors::{build_intanft, FactorSeries, IntanftOutput, Weighting};
use crate::fundamentals::{derive_all, winsorize, Derived};
use crate::ortho::{orthogonalize, SpanningFit};
use crate::panel::{
    build_panel, load_factors, FirmYearRecord, MonthWindow, MonthlyReturnRecord, OrphanPolicy,
    Panel,
};

use super::config::StudyConfig;
use super::StudyError;

/// Factor order of the study regressions (model regressor positions
/// b1..b6 before the intangible factor).
pub const MODEL_FACTORS: [&str; 6] = ["mktrf", "smb", "hml", "rmw", "cma", "umd"];

/// Spanning set of the INTANFT orthogonalization: the five benchmark factors
/// excluding momentum.
pub const SPANNING_FACTORS: [&str; 5] = ["mktrf", "smb", "hml", "rmw", "cma"];

/// Everything the table pipelines need for one study window.
pub struct WindowContext {
    pub window: MonthWindow,
    /// Filename-safe window label, e.g. "1993-01_2022-12".
    pub label: String,
    pub panel: Panel,
    pub derived: Derived,
    pub intanft: IntanftOutput,
    pub spanning: SpanningFit,
    pub intanft_org: FactorSeries,
    factor_series: BTreeMap<&'static str, FactorSeries>,
}

impl WindowContext {
    pub fn factor(&self, name: &str) -> &FactorSeries {
        &self.factor_series[name]
    }

    /// The model's seven regressors with the given intangible series last.
    pub fn model_regressors<'a>(&'a self, intangible: &'a FactorSeries) -> Vec<&'a FactorSeries> {
        let mut regressors: Vec<&FactorSeries> =
            MODEL_FACTORS.iter().map(|n| self.factor(n)).collect();
        regressors.push(intangible);
        regressors
    }
}

/// Builds the full context for one window from already-loaded fundamentals
/// and returns (factors are loaded here, per window).
pub fn build_window_context(
    config: &StudyConfig,
    window: MonthWindow,
    fundamentals: &[FirmYearRecord],
    returns: &[MonthlyReturnRecord],
) -> Result<WindowContext, StudyError> {
    let factors = load_factors(&config.factors_path, window)?;
    let orphans = if config.allow_orphan_returns {
        OrphanPolicy::Tolerate
    } else {
        OrphanPolicy::Fatal
    };
    let panel = build_panel(
        fundamentals.to_vec(),
        returns.to_vec(),
        factors,
        window,
        orphans,
    )?;

    let mut derived = derive_all(&panel, config.sga_min_group)?;
    if let Some(pct) = config.winsor_pct {
        winsorize(&mut derived.records, pct);
    }

    let intanft = build_intanft(
        &panel,
        &derived,
        window,
        &IntanftConfig {
            breakpoints: config.breakpoints,
            weighting: config.intanft_weighting,
        },
    )?;

    let mut factor_series = BTreeMap::new();
    for name in ["mktrf", "smb", "hml", "rmw", "cma", "umd", "rf"] {
        let values = panel.factor_column(name).expect("known factor column");
        factor_series.insert(
            name,
            FactorSeries::new(name.to_ascii_uppercase(), window, values),
        );
    }

    let spanning_refs: Vec<&FactorSeries> = SPANNING_FACTORS
        .iter()
        .map(|n| &factor_series[n])
        .collect();
    let spanning = orthogonalize(&intanft.series, &spanning_refs, window)?;
    let intanft_org = spanning.orthogonal_series.clone();

    Ok(WindowContext {
        window,
        label: format!("{}_{}", window.start, window.end),
        panel,
        derived,
        intanft,
        spanning,
        intanft_org,
        factor_series,
    })
}

/// Weighting used for test portfolios in this run.
pub fn portfolio_weighting(config: &StudyConfig) -> Weighting {
    config.weighting
}
