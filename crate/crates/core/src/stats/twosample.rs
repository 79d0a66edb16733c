//! Welch mean test and Mann-Whitney rank-sum median test.

use super::StatsError;

/// Paired mean/median comparison of two samples, reported as the Welch t and
/// the rank-sum z under the "a minus b" sign convention.
#[derive(Debug, Clone)]
pub struct TwoSampleTest {
    pub t_value: f64,
    pub z_value: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub median_a: f64,
    pub median_b: f64,
    pub n_a: usize,
    pub n_b: usize,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample median; even lengths average the two middle order statistics.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN sample"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// One-sample t of the mean against zero, with its two-sided p-value.
pub fn one_sample_t(xs: &[f64]) -> Result<(f64, f64), StatsError> {
    if xs.len() < 2 {
        return Err(StatsError::TooFewObservations {
            n: xs.len(),
            needed: 2,
        });
    }
    let v = sample_variance(xs);
    if v <= 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let n = xs.len() as f64;
    let t = mean(xs) / (v / n).sqrt();
    let p = super::special::student_t_two_sided(t, n - 1.0);
    Ok((t, p))
}

/// Welch two-sample t statistic (unequal variances), sign = mean(a) - mean(b).
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::TooFewObservations {
            n: a.len().min(b.len()),
            needed: 2,
        });
    }
    let va = sample_variance(a);
    let vb = sample_variance(b);
    let denom = va / a.len() as f64 + vb / b.len() as f64;
    if denom <= 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((mean(a) - mean(b)) / denom.sqrt())
}

/// Mann-Whitney rank-sum z via the normal approximation with average ranks
/// for ties, tie-corrected variance, and a continuity correction.
///
/// Negative z means sample `a` ranks below sample `b`.
pub fn ranksum_z(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    let n_a = a.len();
    let n_b = b.len();
    if n_a < 8 || n_b < 8 {
        return Err(StatsError::TooFewObservations {
            n: n_a.min(n_b),
            needed: 8,
        });
    }
    let n = n_a + n_b;
    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|v| (*v, true))
        .chain(b.iter().map(|v| (*v, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("non-NaN sample"));

    // Average ranks within tie groups; collect tie-group sizes as we go.
    let mut rank_sum_a = 0.0f64;
    let mut tie_term = 0.0f64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let group = (j - i) as f64;
        let avg_rank = (i + j + 1) as f64 / 2.0; // ranks are 1-based
        for item in &pooled[i..j] {
            if item.1 {
                rank_sum_a += avg_rank;
            }
        }
        tie_term += group * group * group - group;
        i = j;
    }

    let n_af = n_a as f64;
    let n_bf = n_b as f64;
    let nf = n as f64;
    let u_a = rank_sum_a - n_af * (n_af + 1.0) / 2.0;
    let mean_u = n_af * n_bf / 2.0;
    let variance = n_af * n_bf / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if variance <= 0.0 {
        // Every pooled value identical.
        return Err(StatsError::ZeroVariance);
    }
    let d = u_a - mean_u;
    if d.abs() <= 0.5 {
        return Ok(0.0);
    }
    Ok((d - 0.5 * d.signum()) / variance.sqrt())
}

/// Runs both tests and summarizes locations of the two samples.
pub fn two_sample_test(a: &[f64], b: &[f64]) -> Result<TwoSampleTest, StatsError> {
    Ok(TwoSampleTest {
        t_value: welch_t(a, b)?,
        z_value: ranksum_z(a, b)?,
        mean_a: mean(a),
        mean_b: mean(b),
        median_a: median(a),
        median_b: median(b),
        n_a: a.len(),
        n_b: b.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identical_samples_give_zero_t() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(welch_t(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_variances_error() {
        let a = [0.0, 0.0, 0.0, 0.0];
        let b = [1.0, 1.0, 1.0, 1.0];
        assert!(matches!(welch_t(&a, &b), Err(StatsError::ZeroVariance)));
    }

    #[test]
    fn welch_matches_direct_formula_reference() {
        let a = [1.1, 2.3, 0.7, 1.9, 2.8, 1.4, 0.9, 2.2];
        let b = [0.4, 1.2, 0.8, 1.5, 0.3, 1.0, 0.6, 1.1, 0.9, 1.3];
        let t = welch_t(&a, &b).unwrap();
        assert_relative_eq!(t, 2.5728047080768857, max_relative = 1e-12);
    }

    #[test]
    fn welch_is_antisymmetric() {
        let a = [1.1, 2.3, 0.7, 1.9, 2.8, 1.4, 0.9, 2.2];
        let b = [0.4, 1.2, 0.8, 1.5, 0.3, 1.0, 0.6, 1.1, 0.9, 1.3];
        let t_ab = welch_t(&a, &b).unwrap();
        let t_ba = welch_t(&b, &a).unwrap();
        assert_relative_eq!(t_ab, -t_ba, max_relative = 1e-14);
    }

    #[test]
    fn total_separation_gives_extreme_negative_z() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let b = [11.0, 12.0, 13.0, 14.0, 15.0, 16.0, 17.0, 18.0];
        let z = ranksum_z(&a, &b).unwrap();
        // U_a = 0 at total separation; the z with continuity correction.
        let mean_u = 32.0;
        let var: f64 = 8.0 * 8.0 * 17.0 / 12.0;
        let expected = (0.0 - mean_u + 0.5) / var.sqrt();
        assert_relative_eq!(z, expected, max_relative = 1e-12);
        assert!(z < 0.0);
    }

    #[test]
    fn ranksum_is_antisymmetric_with_ties() {
        let a = [1.0, 2.0, 2.0, 3.0, 5.0, 5.0, 7.0, 9.0, 4.0];
        let b = [2.0, 2.0, 4.0, 4.0, 6.0, 8.0, 8.0, 9.0];
        let z_ab = ranksum_z(&a, &b).unwrap();
        let z_ba = ranksum_z(&b, &a).unwrap();
        assert_relative_eq!(z_ab, -z_ba, max_relative = 1e-12);
    }

    #[test]
    fn all_tied_pool_errors() {
        let a = [3.0; 8];
        let b = [3.0; 8];
        assert!(matches!(ranksum_z(&a, &b), Err(StatsError::ZeroVariance)));
    }

    #[test]
    fn small_samples_rejected() {
        let a = [1.0; 7];
        let b = [2.0; 8];
        assert!(matches!(
            ranksum_z(&a, &b),
            Err(StatsError::TooFewObservations { needed: 8, .. })
        ));
    }

    #[test]
    fn median_interpolates_even_lengths() {
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&[5.0, 1.0, 3.0]), 3.0);
    }
}
