//! factorlab: a factor-research engine for intangible-intensity factor
//! studies over user-supplied firm panel data.
//!
//! The pipeline runs in layers: [`panel`] loads and aligns fundamentals,
//! monthly returns, and benchmark factor series; [`fundamentals`] derives
//! firm-level variables (MTB, ROE, OP, the SG&A investment component, and
//! the intangible-intensity ratio INTAN); [`factors`] builds the INTANFT
//! long-short factor and quantile test portfolios; [`ortho`] produces
//! spanning-regression orthogonalizations; [`study`] reproduces the full set
//! of study tables as deterministic artifacts; [`synth`] generates seeded
//! synthetic panels with planted ground truth for end-to-end verification.

pub mod factors;
pub mod fundamentals;
pub mod kv;
pub mod ortho;
pub mod panel;
pub mod stats;
pub mod study;
pub mod synth;
