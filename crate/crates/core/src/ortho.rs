//! Factor orthogonalization: spanning regressions whose intercept-plus-
//! residual series preserve a factor's incremental content, and the RMW
//! decomposition into intangible and residual components.

use thiserror::Error;

use crate::factors::FactorSeries;
use crate::panel::MonthWindow;
use crate::stats::{ols, RegressionResult, StatsError};

#[derive(Debug, Error)]
pub enum OrthoError {
    #[error("series {name} covers {have}, need {want}")]
    WindowMismatch {
        name: String,
        have: String,
        want: String,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// A spanning regression of one factor on a factor set, with the
/// orthogonalized (intercept + residual) and projected (fitted) series.
#[derive(Debug, Clone)]
pub struct SpanningFit {
    pub dependent: String,
    pub regressors: Vec<String>,
    pub fit: RegressionResult,
    /// Intercept plus residual: the dependent series stripped of its spanned
    /// component.
    pub orthogonal_series: FactorSeries,
    /// Fitted values.
    pub projected_series: FactorSeries,
}

fn check_window(series: &FactorSeries, window: MonthWindow) -> Result<(), OrthoError> {
    if series.window() != window {
        return Err(OrthoError::WindowMismatch {
            name: series.name.clone(),
            have: series.window().to_string(),
            want: window.to_string(),
        });
    }
    Ok(())
}

/// Regresses `series` on `against` over `window` and forms the orthogonal
/// version as intercept + residual.
///
/// The orthogonalized series reproduces the dependent exactly through
/// `orthogonal[t] + projected[t] - intercept = dependent[t]`.
pub fn orthogonalize(
    series: &FactorSeries,
    against: &[&FactorSeries],
    window: MonthWindow,
) -> Result<SpanningFit, OrthoError> {
    check_window(series, window)?;
    for factor in against {
        check_window(factor, window)?;
    }
    let columns: Vec<&[f64]> = against.iter().map(|f| f.values.as_slice()).collect();
    let fit = ols(&series.values, &columns, true)?;
    let intercept = fit.coefficients[0];
    let orthogonal: Vec<f64> = fit.residuals.iter().map(|e| intercept + e).collect();
    Ok(SpanningFit {
        dependent: series.name.clone(),
        regressors: against.iter().map(|f| f.name.clone()).collect(),
        orthogonal_series: FactorSeries::new(
            format!("{}_Org", series.name),
            window,
            orthogonal,
        ),
        projected_series: FactorSeries::new(
            format!("{}_Proj", series.name),
            window,
            fit.fitted.clone(),
        ),
        fit,
    })
}

/// Splits RMW into its intangible-investment component (the fitted values of
/// a regression on INTANFT) and the orthogonal remainder (intercept +
/// residual).
///
/// The identity `rmw_intan[t] + rmw_org[t] - a = rmw[t]` holds elementwise,
/// with `a` the regression intercept.
pub fn decompose_rmw(
    rmw: &FactorSeries,
    intanft: &FactorSeries,
    window: MonthWindow,
) -> Result<(FactorSeries, FactorSeries, SpanningFit), OrthoError> {
    let spanning = orthogonalize(rmw, &[intanft], window)?;
    let rmw_org = FactorSeries::new("RMW_Org", window, spanning.orthogonal_series.values.clone());
    let rmw_intan = FactorSeries::new("RMW_INTAN", window, spanning.fit.fitted.clone());
    Ok((rmw_org, rmw_intan, spanning))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::pearson;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn window() -> MonthWindow {
        "1993-01..1997-12".parse().unwrap()
    }

    fn series(name: &str, values: Vec<f64>) -> FactorSeries {
        FactorSeries::new(name, window(), values)
    }

    fn random_series(name: &str, rng: &mut StdRng, scale: f64) -> FactorSeries {
        let n = window().len();
        series(name, (0..n).map(|_| rng.random_range(-scale..scale)).collect())
    }

    #[test]
    fn uncorrelated_series_is_near_fixed_point() {
        let mut rng = StdRng::seed_from_u64(5);
        let dep = random_series("Y", &mut rng, 0.03);
        let f1 = random_series("A", &mut rng, 0.03);
        let f2 = random_series("B", &mut rng, 0.03);
        let fitres = orthogonalize(&dep, &[&f1, &f2], window()).unwrap();
        // Slopes are statistically near zero; the orthogonal series tracks
        // the original closely once the weak projection is removed.
        for j in 0..2 {
            assert!(
                fitres.fit.slope(j).abs() <= 4.0 * fitres.fit.slope_se(j),
                "slope {j} = {} (se {})",
                fitres.fit.slope(j),
                fitres.fit.slope_se(j)
            );
        }
        let (corr, _) = pearson(&fitres.orthogonal_series.values, &dep.values).unwrap();
        assert!(corr > 0.9, "corr = {corr}");
    }

    #[test]
    fn exact_linear_combination_collapses_to_intercept() {
        let mut rng = StdRng::seed_from_u64(6);
        let f1 = random_series("A", &mut rng, 0.05);
        let f2 = random_series("B", &mut rng, 0.05);
        let dep_values: Vec<f64> = f1
            .values
            .iter()
            .zip(f2.values.iter())
            .map(|(a, b)| 0.004 + 1.5 * a - 0.7 * b)
            .collect();
        let dep = series("Y", dep_values);
        let fitres = orthogonalize(&dep, &[&f1, &f2], window()).unwrap();
        assert_relative_eq!(fitres.fit.r_squared, 1.0, max_relative = 1e-10);
        for v in &fitres.orthogonal_series.values {
            assert_relative_eq!(*v, 0.004, max_relative = 1e-8);
        }
    }

    #[test]
    fn planted_slope_recovered_and_residual_uncorrelated() {
        let mut rng = StdRng::seed_from_u64(7);
        let hml = random_series("HML", &mut rng, 0.04);
        let noise: Vec<f64> = (0..window().len())
            .map(|_| rng.random_range(-0.01..0.01))
            .collect();
        let dep = series(
            "INTANFT",
            hml.values
                .iter()
                .zip(noise.iter())
                .map(|(h, e)| 0.5 * h + e)
                .collect(),
        );
        let fitres = orthogonalize(&dep, &[&hml], window()).unwrap();
        let slope = fitres.fit.slope(0);
        let se = fitres.fit.slope_se(0);
        assert!(
            (slope - 0.5).abs() <= 3.0 * se,
            "slope {slope} not within 3se of 0.5 (se {se})"
        );
        let (corr, _) = pearson(&fitres.orthogonal_series.values, &hml.values).unwrap();
        assert!(corr.abs() <= 1e-8, "residual correlation {corr}");
    }

    #[test]
    fn reconstruction_identity_holds() {
        let mut rng = StdRng::seed_from_u64(8);
        let f1 = random_series("A", &mut rng, 0.05);
        let f2 = random_series("B", &mut rng, 0.02);
        let dep = random_series("Y", &mut rng, 0.06);
        let fitres = orthogonalize(&dep, &[&f1, &f2], window()).unwrap();
        let a = fitres.fit.coefficients[0];
        for t in 0..window().len() {
            let lhs =
                fitres.orthogonal_series.values[t] + fitres.projected_series.values[t] - a;
            assert_relative_eq!(lhs, dep.values[t], epsilon = 1e-12);
        }
    }

    #[test]
    fn idempotence() {
        let mut rng = StdRng::seed_from_u64(9);
        let f1 = random_series("A", &mut rng, 0.05);
        let dep = random_series("Y", &mut rng, 0.05);
        let first = orthogonalize(&dep, &[&f1], window()).unwrap();
        let second = orthogonalize(&first.orthogonal_series, &[&f1], window()).unwrap();
        assert!(second.fit.slope(0).abs() < 1e-9);
    }

    #[test]
    fn rmw_decomposition_identities() {
        let mut rng = StdRng::seed_from_u64(10);
        let intanft = random_series("INTANFT", &mut rng, 0.04);
        let rmw = random_series("RMW", &mut rng, 0.03);
        let (rmw_org, rmw_intan, spanning) = decompose_rmw(&rmw, &intanft, window()).unwrap();
        let a = spanning.fit.coefficients[0];
        for t in 0..window().len() {
            assert_relative_eq!(
                rmw_intan.values[t] + rmw_org.values[t] - a,
                rmw.values[t],
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn rmw_exact_multiple_of_intanft() {
        let mut rng = StdRng::seed_from_u64(11);
        let intanft = random_series("INTANFT", &mut rng, 0.04);
        let rmw = series("RMW", intanft.values.iter().map(|v| 2.0 * v).collect());
        let (rmw_org, rmw_intan, spanning) = decompose_rmw(&rmw, &intanft, window()).unwrap();
        assert_relative_eq!(spanning.fit.slope(0), 2.0, max_relative = 1e-10);
        assert!(spanning.fit.coefficients[0].abs() < 1e-12);
        for t in 0..window().len() {
            assert_relative_eq!(rmw_intan.values[t], rmw.values[t], epsilon = 1e-10);
            assert_relative_eq!(rmw_org.values[t], 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn window_mismatch_detected() {
        let mut rng = StdRng::seed_from_u64(12);
        let dep = random_series("Y", &mut rng, 0.05);
        let short_window: MonthWindow = "1993-01..1996-12".parse().unwrap();
        let f1 = FactorSeries::new(
            "A",
            short_window,
            (0..short_window.len()).map(|_| 0.01).collect(),
        );
        assert!(matches!(
            orthogonalize(&dep, &[&f1], window()),
            Err(OrthoError::WindowMismatch { .. })
        ));
    }
}
