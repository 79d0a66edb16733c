//! Numeric kernel: multiple OLS with inference, Pearson correlation, and
//! two-sample location tests. All functions are pure and safe to call
//! concurrently.

pub mod ols;
pub mod pearson;
pub mod special;
pub mod twosample;

use thiserror::Error;

pub use ols::{ols, RegressionResult};
pub use pearson::pearson;
pub use special::{beta_inc, erfc, ln_gamma, normal_two_sided, student_t_two_sided};
pub use twosample::{mean, median, one_sample_t, ranksum_z, two_sample_test, welch_t, TwoSampleTest};

/// Errors from the numeric kernel.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    #[error("design matrix is rank deficient over columns {columns:?} (0 = intercept when present)")]
    RankDeficient { columns: Vec<usize> },
    #[error("column {column} has {got} observations, expected {expected}")]
    LengthMismatch {
        column: usize,
        expected: usize,
        got: usize,
    },
    #[error("{n} observations, need at least {needed}")]
    TooFewObservations { n: usize, needed: usize },
    #[error("sample has zero variance")]
    ZeroVariance,
}
