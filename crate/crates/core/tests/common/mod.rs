//! Shared test support: an extended-precision normal-equations OLS oracle
//! (double-double arithmetic), small dense linear algebra for planted-value
//! math, and panel fixture helpers.
//!
//! Everything here is deliberately independent of the library's own solver
//! paths: the oracle goes through the normal equations, the library through
//! Householder QR.

#![allow(dead_code)] // each integration-test binary uses a different subset

use factorlab::panel::{
    build_panel, FactorObservation, MonthWindow, OrphanPolicy, Panel,
};
use factorlab::synth::GeneratedPanel;

// --- double-double arithmetic ------------------------------------------------

/// A double-double value: an unevaluated sum `hi + lo` carrying roughly 106
/// bits of precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            self.neg()
        } else {
            self
        }
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

/// Error-free sum of two doubles (Knuth two-sum).
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Error-free product via FMA.
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

pub fn dd_add(a: Dd, b: Dd) -> Dd {
    let (s1, s2) = two_sum(a.hi, b.hi);
    let s2 = s2 + a.lo + b.lo;
    let (hi, lo) = two_sum(s1, s2);
    Dd { hi, lo }
}

pub fn dd_sub(a: Dd, b: Dd) -> Dd {
    dd_add(a, b.neg())
}

pub fn dd_mul(a: Dd, b: Dd) -> Dd {
    let (p1, p2) = two_prod(a.hi, b.hi);
    let p2 = p2 + a.hi * b.lo + a.lo * b.hi;
    let (hi, lo) = two_sum(p1, p2);
    Dd { hi, lo }
}

pub fn dd_div(a: Dd, b: Dd) -> Dd {
    // One Newton refinement over the f64 quotient.
    let q1 = a.hi / b.hi;
    let r = dd_sub(a, dd_mul(Dd::from_f64(q1), b));
    let q2 = r.to_f64() / b.hi;
    let (hi, lo) = two_sum(q1, q2);
    Dd { hi, lo }
}

pub fn dd_dot(x: &[f64], y: &[f64]) -> Dd {
    let mut acc = Dd::ZERO;
    for (a, b) in x.iter().zip(y.iter()) {
        let (p, e) = two_prod(*a, *b);
        acc = dd_add(acc, Dd { hi: p, lo: e });
    }
    acc
}

/// Solves `A x = rhs` for dense square A in double-double arithmetic with
/// partial pivoting. A is row-major, consumed by value.
pub fn dd_solve(mut a: Vec<Vec<Dd>>, mut rhs: Vec<Dd>) -> Vec<Dd> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i][col]
                    .abs()
                    .to_f64()
                    .partial_cmp(&a[j][col].abs().to_f64())
                    .expect("finite pivots")
            })
            .expect("non-empty");
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let factor = dd_div(a[row][col], a[col][col]);
            for k in col..n {
                let delta = dd_mul(factor, a[col][k]);
                a[row][k] = dd_sub(a[row][k], delta);
            }
            let delta = dd_mul(factor, rhs[col]);
            rhs[row] = dd_sub(rhs[row], delta);
        }
    }
    let mut x = vec![Dd::ZERO; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc = dd_sub(acc, dd_mul(a[row][k], x[k]));
        }
        x[row] = dd_div(acc, a[row][row]);
    }
    x
}

/// Inverse of a dense square matrix in double-double arithmetic, by solving
/// against unit vectors. Returns column-major columns.
pub fn dd_inverse(a: &[Vec<Dd>]) -> Vec<Vec<Dd>> {
    let n = a.len();
    (0..n)
        .map(|j| {
            let mut e = vec![Dd::ZERO; n];
            e[j] = Dd::from_f64(1.0);
            dd_solve(a.to_vec(), e)
        })
        .collect()
}

/// Extended-precision OLS fit from the closed-form normal equations.
pub struct OracleFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub r_squared: f64,
}

/// Normal-equations oracle: builds X'X and X'y with error-free dot products,
/// solves in double-double, and derives inference the textbook way.
pub fn ols_oracle(y: &[f64], columns: &[&[f64]], intercept: bool) -> OracleFit {
    let n = y.len();
    let ones = vec![1.0f64; n];
    let mut design: Vec<&[f64]> = Vec::new();
    if intercept {
        design.push(&ones);
    }
    design.extend(columns.iter().copied());
    let p = design.len();

    let gram: Vec<Vec<Dd>> = (0..p)
        .map(|i| (0..p).map(|j| dd_dot(design[i], design[j])).collect())
        .collect();
    let xty: Vec<Dd> = (0..p).map(|i| dd_dot(design[i], y)).collect();
    let beta = dd_solve(gram.clone(), xty);

    // Residual sum of squares via y'y - 2 b'X'y + b'X'Xb in double-double.
    let mut fitted = vec![Dd::ZERO; n];
    for (j, col) in design.iter().enumerate() {
        for (f, x) in fitted.iter_mut().zip(col.iter()) {
            *f = dd_add(*f, dd_mul(beta[j], Dd::from_f64(*x)));
        }
    }
    let mut sse = Dd::ZERO;
    for (f, yi) in fitted.iter().zip(y.iter()) {
        let e = dd_sub(Dd::from_f64(*yi), *f);
        sse = dd_add(sse, dd_mul(e, e));
    }

    let sst = if intercept {
        let mean = dd_div(dd_dot(y, &ones), Dd::from_f64(n as f64));
        let mut acc = Dd::ZERO;
        for yi in y {
            let d = dd_sub(Dd::from_f64(*yi), mean);
            acc = dd_add(acc, dd_mul(d, d));
        }
        acc
    } else {
        dd_dot(y, y)
    };
    let r_squared = dd_sub(Dd::from_f64(1.0), dd_div(sse, sst)).to_f64();

    let df = n - p;
    let s2 = dd_div(sse, Dd::from_f64(df as f64));
    let inv = dd_inverse(&gram);
    let mut std_errors = Vec::with_capacity(p);
    let mut t_stats = Vec::with_capacity(p);
    for j in 0..p {
        let var = dd_mul(s2, inv[j][j]).to_f64().max(0.0);
        let se = var.sqrt();
        std_errors.push(se);
        t_stats.push(beta[j].to_f64() / se);
    }

    OracleFit {
        coefficients: beta.iter().map(|b| b.to_f64()).collect(),
        std_errors,
        t_stats,
        r_squared,
    }
}

// --- f64 dense helpers for planted-value math ---------------------------------

/// Solves `A x = b` (row-major, f64) by Gaussian elimination with partial
/// pivoting.
pub fn solve_f64(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let acc: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - acc) / a[row][row];
    }
    x
}

pub fn inverse_f64(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            solve_f64(a.to_vec(), e)
        })
        .collect();
    // Transpose the solution columns back to row-major.
    (0..n)
        .map(|i| (0..n).map(|j| cols[j][i]).collect())
        .collect()
}

// --- fixture helpers -----------------------------------------------------------

/// Assembles a Panel directly from an in-memory generated panel.
pub fn panel_from_generated(g: &GeneratedPanel, window: MonthWindow) -> Panel {
    let factors: Vec<FactorObservation> = g
        .factors
        .iter()
        .copied()
        .filter(|o| window.contains(&o.month))
        .collect();
    build_panel(
        g.fundamentals(),
        g.returns.clone(),
        factors,
        window,
        OrphanPolicy::Fatal,
    )
    .expect("generated panel is self-consistent")
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    let scale = a.abs().max(b.abs()).max(1.0);
    (a - b).abs() <= tol * scale
}

#[cfg(test)]
mod self_tests {
    use super::*;

    #[test]
    fn dd_arithmetic_carries_extra_precision() {
        // (1e16 + 1) - 1e16 collapses to 0 in f64 but survives in dd.
        let a = dd_add(Dd::from_f64(1e16), Dd::from_f64(1.0));
        let d = dd_sub(a, Dd::from_f64(1e16));
        assert_eq!(d.to_f64(), 1.0);
    }

    #[test]
    fn dd_solve_identity() {
        let a = vec![
            vec![Dd::from_f64(2.0), Dd::from_f64(1.0)],
            vec![Dd::from_f64(1.0), Dd::from_f64(3.0)],
        ];
        let x = dd_solve(a, vec![Dd::from_f64(5.0), Dd::from_f64(10.0)]);
        assert!((x[0].to_f64() - 1.0).abs() < 1e-30);
        assert!((x[1].to_f64() - 3.0).abs() < 1e-30);
    }
}
