//! Pearson correlation with two-sided significance.

use super::special::student_t_two_sided;
use super::StatsError;

/// Pearson correlation of two equal-length samples with its two-sided
/// p-value from t = r·sqrt((n-2)/(1-r²)).
pub fn pearson(x: &[f64], y: &[f64]) -> Result<(f64, f64), StatsError> {
    let n = x.len();
    if y.len() != n {
        return Err(StatsError::LengthMismatch {
            column: 1,
            expected: n,
            got: y.len(),
        });
    }
    if n < 3 {
        return Err(StatsError::TooFewObservations { n, needed: 3 });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y.iter()) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let p = if (1.0 - r * r) <= 0.0 {
        0.0
    } else {
        let t = r * ((nf - 2.0) / (1.0 - r * r)).sqrt();
        student_t_two_sided(t, nf - 2.0)
    };
    Ok((r, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn self_correlation_is_one() {
        let x = [1.0, 3.0, 2.0, 5.0, 4.0];
        let (r, p) = pearson(&x, &x).unwrap();
        assert_relative_eq!(r, 1.0, epsilon = 1e-15);
        assert!(p < 1e-12);
    }

    #[test]
    fn sign_flip_is_minus_one() {
        let x = [1.0, 3.0, 2.0, 5.0, 4.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let (r, _) = pearson(&x, &neg).unwrap();
        assert_relative_eq!(r, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn matches_extended_precision_reference() {
        // 20-point fixture; r, t, p frozen from 60-digit arithmetic.
        let x = [
            0.12, 1.4, -0.6, 2.3, 0.9, 3.1, -1.2, 0.4, 1.8, 2.6, -0.3, 0.7, 1.1, 2.0, -0.9, 1.5,
            0.2, 2.9, 0.5, 1.0,
        ];
        let y = [
            0.8, 2.1, 0.3, 3.7, 1.2, 4.0, -0.7, 1.1, 2.2, 3.9, 0.6, 0.9, 2.4, 2.8, -0.2, 2.5, 0.1,
            4.4, 1.3, 1.6,
        ];
        let (r, p) = pearson(&x, &y).unwrap();
        assert_relative_eq!(r, 0.9700799839472518, max_relative = 1e-12);
        assert_relative_eq!(p, 1.637298416812919e-12, max_relative = 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        let x = [1.0, 1.0, 1.0];
        let y = [1.0, 2.0, 3.0];
        assert!(matches!(pearson(&x, &y), Err(StatsError::ZeroVariance)));
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0, 2.0]),
            Err(StatsError::TooFewObservations { .. })
        ));
        assert!(matches!(
            pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(StatsError::LengthMismatch { .. })
        ));
    }
}
