//! Multiple OLS with homoskedastic inference, solved by Householder QR.
//!
//! The orthogonal decomposition is used instead of the normal equations for
//! numerical stability on collinear factor data; the normal-equations route
//! exists only as an independent oracle in the test suite.

use super::special::student_t_two_sided;
use super::StatsError;

/// Output of one OLS fit.
///
/// `coefficients` holds the intercept first when one was requested, followed
/// by one slope per regressor column, with `t_stats`, `p_values`, and
/// `std_errors` aligned to it.
#[derive(Debug, Clone)]
pub struct RegressionResult {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    pub n_obs: usize,
    pub k_regressors: usize,
    pub intercept: bool,
}

impl RegressionResult {
    /// Residual degrees of freedom.
    pub fn df(&self) -> usize {
        self.n_obs - self.coefficients.len()
    }

    /// Intercept estimate, when one was fitted.
    pub fn intercept_value(&self) -> Option<f64> {
        self.intercept.then(|| self.coefficients[0])
    }

    /// Slope on regressor `j` (0-based, skipping the intercept).
    pub fn slope(&self, j: usize) -> f64 {
        self.coefficients[if self.intercept { j + 1 } else { j }]
    }

    pub fn slope_t(&self, j: usize) -> f64 {
        self.t_stats[if self.intercept { j + 1 } else { j }]
    }

    pub fn slope_se(&self, j: usize) -> f64 {
        self.std_errors[if self.intercept { j + 1 } else { j }]
    }
}

/// Ordinary least squares of `y` on the given regressor columns.
///
/// Requires every column to match `y` in length, `n >= k + 2`, and a design
/// matrix of full column rank (the intercept column included when flagged).
/// t-statistics use homoskedastic standard errors with `n - k - 1` degrees of
/// freedom under an intercept; p-values are two-sided Student-t.
pub fn ols(y: &[f64], columns: &[&[f64]], intercept: bool) -> Result<RegressionResult, StatsError> {
    let n = y.len();
    let k = columns.len();
    for (j, col) in columns.iter().enumerate() {
        if col.len() != n {
            return Err(StatsError::LengthMismatch {
                column: j,
                expected: n,
                got: col.len(),
            });
        }
    }
    if n < k + 2 {
        return Err(StatsError::TooFewObservations { n, needed: k + 2 });
    }
    let p = k + usize::from(intercept);
    if p == 0 {
        return Err(StatsError::TooFewObservations { n, needed: 2 });
    }

    // Column-major working copy of the design matrix.
    let mut design: Vec<Vec<f64>> = Vec::with_capacity(p);
    if intercept {
        design.push(vec![1.0; n]);
    }
    for col in columns {
        design.push(col.to_vec());
    }
    let original = design.clone();
    let mut rhs = y.to_vec();
    let col_norms: Vec<f64> = design
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();

    // Householder QR, applied in place to `design` and `rhs`. After step j,
    // column j holds R[..=j][j] on and above the diagonal.
    let mut r_mat = vec![vec![0.0f64; p]; p];
    for j in 0..p {
        let (head, tail) = design.split_at_mut(j + 1);
        let col = &mut head[j];
        let norm_x: f64 = col[j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        let tol = 1e-10 * col_norms[j].max(1e-30);
        if norm_x <= tol {
            return Err(StatsError::RankDeficient {
                columns: (0..=j).collect(),
            });
        }
        let alpha = if col[j] >= 0.0 { -norm_x } else { norm_x };
        // v = x - alpha·e1, normalized so v[0] = 1 is implicit via beta.
        let mut v = col[j..].to_vec();
        v[0] -= alpha;
        let v_norm_sq: f64 = v.iter().map(|x| x * x).sum();
        if v_norm_sq > 0.0 {
            let apply = |target: &mut [f64]| {
                let dot: f64 = v
                    .iter()
                    .zip(target[j..].iter())
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
                let scale = 2.0 * dot / v_norm_sq;
                for (vi, ti) in v.iter().zip(target[j..].iter_mut()) {
                    *ti -= scale * vi;
                }
            };
            for t in tail.iter_mut() {
                apply(t);
            }
            apply(&mut rhs);
            col[j] = alpha;
            for c in col[j + 1..].iter_mut() {
                *c = 0.0;
            }
        }
        if col[j].abs() <= tol {
            return Err(StatsError::RankDeficient {
                columns: (0..=j).collect(),
            });
        }
    }
    for j in 0..p {
        for (i, row) in r_mat.iter_mut().enumerate().take(j + 1) {
            row[j] = design[j][i];
        }
    }

    // Back-substitute R beta = (Q^T y)[..p].
    let mut beta = vec![0.0f64; p];
    for i in (0..p).rev() {
        let mut acc = rhs[i];
        for j in i + 1..p {
            acc -= r_mat[i][j] * beta[j];
        }
        beta[i] = acc / r_mat[i][i];
    }

    // Fitted values and residuals from the untouched design.
    let mut fitted = vec![0.0f64; n];
    for (j, col) in original.iter().enumerate() {
        let b = beta[j];
        for (f, x) in fitted.iter_mut().zip(col.iter()) {
            *f += b * x;
        }
    }
    let residuals: Vec<f64> = y.iter().zip(fitted.iter()).map(|(yi, fi)| yi - fi).collect();
    let sse: f64 = residuals.iter().map(|e| e * e).sum();

    let sst = if intercept {
        let mean = y.iter().sum::<f64>() / n as f64;
        y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
    } else {
        y.iter().map(|v| v * v).sum::<f64>()
    };
    let mut r_squared = if sst > 0.0 {
        1.0 - sse / sst
    } else if sse <= f64::EPSILON * n as f64 {
        1.0
    } else {
        0.0
    };
    if intercept {
        r_squared = r_squared.clamp(0.0, 1.0);
    }

    // Homoskedastic covariance: s^2 (X'X)^{-1} = s^2 R^{-1} R^{-T}.
    let df = n - p;
    let s2 = sse / df as f64;
    let r_inv = invert_upper_triangular(&r_mat);
    let mut std_errors = vec![0.0f64; p];
    for i in 0..p {
        let var: f64 = (i..p).map(|j| r_inv[i][j] * r_inv[i][j]).sum::<f64>() * s2;
        std_errors[i] = var.max(0.0).sqrt();
    }
    let t_stats: Vec<f64> = beta
        .iter()
        .zip(std_errors.iter())
        .map(|(b, se)| {
            if *se > 0.0 {
                b / se
            } else if *b == 0.0 {
                0.0
            } else {
                b.signum() * f64::INFINITY
            }
        })
        .collect();
    let p_values: Vec<f64> = t_stats
        .iter()
        .map(|t| student_t_two_sided(*t, df as f64))
        .collect();

    Ok(RegressionResult {
        coefficients: beta,
        std_errors,
        t_stats,
        p_values,
        r_squared,
        residuals,
        fitted,
        n_obs: n,
        k_regressors: k,
        intercept,
    })
}

#[allow(clippy::needless_range_loop)] // triangular indexing reads clearest as written
fn invert_upper_triangular(r: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = r.len();
    let mut inv = vec![vec![0.0f64; p]; p];
    for i in (0..p).rev() {
        inv[i][i] = 1.0 / r[i][i];
        for j in i + 1..p {
            let acc: f64 = (i + 1..=j).map(|l| r[i][l] * inv[l][j]).sum();
            inv[i][j] = -acc / r[i][i];
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_line_recovers_slope_one() {
        let y = [1.0, 2.0, 3.0];
        let x = [1.0, 2.0, 3.0];
        let fit = ols(&y, &[&x], true).unwrap();
        assert_relative_eq!(fit.coefficients[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(fit.coefficients[1], 1.0, max_relative = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn residuals_center_and_orthogonality() {
        // y deliberately not in the span of the regressors.
        let y = [2.0, -1.0, 0.5, 3.0, 1.0, -0.5, 2.5, 0.0];
        let x1 = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let x2 = [0.3, -0.1, 0.8, 0.2, -0.4, 0.9, 0.1, 0.6];
        let fit = ols(&y, &[&x1, &x2], true).unwrap();

        let scale = y.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        let mean_resid = fit.residuals.iter().sum::<f64>() / y.len() as f64;
        assert!(mean_resid.abs() <= 1e-10 * scale);

        let resid_norm = fit.residuals.iter().map(|e| e * e).sum::<f64>().sqrt();
        for col in [&x1[..], &x2[..]] {
            let dot: f64 = fit
                .residuals
                .iter()
                .zip(col.iter())
                .map(|(e, x)| e * x)
                .sum();
            let col_norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(dot.abs() <= 1e-8 * resid_norm * col_norm);
        }

        // y = (a + e) + Xb elementwise.
        for ((f, e), yi) in fit.fitted.iter().zip(&fit.residuals).zip(&y) {
            assert_relative_eq!(f + e, *yi, epsilon = 1e-12);
        }
    }

    #[test]
    fn duplicate_column_is_rank_deficient() {
        let y = [1.0, 2.0, 3.0, 4.0, 5.0];
        let x = [2.0, 4.0, 1.0, 3.0, 5.0];
        let err = ols(&y, &[&x, &x], true).unwrap_err();
        match err {
            StatsError::RankDeficient { columns } => {
                // Intercept is design column 0; the duplicate pair is (1, 2).
                assert_eq!(columns, vec![0, 1, 2]);
            }
            other => panic!("expected RankDeficient, got {other:?}"),
        }
    }

    #[test]
    fn length_and_count_guards() {
        let y = [1.0, 2.0, 3.0];
        let short = [1.0, 2.0];
        assert!(matches!(
            ols(&y, &[&short], true),
            Err(StatsError::LengthMismatch { column: 0, .. })
        ));
        let x = [1.0, 2.0, 3.0];
        let x2 = [0.1, 0.9, 0.3];
        assert!(matches!(
            ols(&y, &[&x, &x2], true),
            Err(StatsError::TooFewObservations { .. })
        ));
    }

    #[test]
    fn no_intercept_fit() {
        // y = 2x exactly, through the origin.
        let y = [2.0, 4.0, 6.0, 8.0];
        let x = [1.0, 2.0, 3.0, 4.0];
        let fit = ols(&y, &[&x], false).unwrap();
        assert_eq!(fit.coefficients.len(), 1);
        assert_relative_eq!(fit.coefficients[0], 2.0, max_relative = 1e-12);
        assert_eq!(fit.df(), 3);
    }

    #[test]
    fn textbook_two_regressor_inference() {
        // Small fixture solvable by hand via normal equations; the full-scale
        // randomized oracle comparison lives in the integration suite.
        let y = [3.1, 4.9, 7.2, 8.8, 11.1, 12.9];
        let x1 = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let fit = ols(&y, &[&x1], true).unwrap();
        // Hand-derived via centered sums: slope = 34.6 / 17.5.
        assert_relative_eq!(fit.coefficients[1], 34.6 / 17.5, max_relative = 1e-10);
        assert_relative_eq!(fit.coefficients[0], 8.0 - (34.6 / 17.5) * 3.5, max_relative = 1e-9);
        assert_eq!(fit.df(), 4);
        assert!(fit.r_squared > 0.998);
        // t = beta / se must match the two exposed vectors.
        for j in 0..2 {
            assert_relative_eq!(
                fit.t_stats[j],
                fit.coefficients[j] / fit.std_errors[j],
                max_relative = 1e-12
            );
        }
    }
}
