//! Paired-sample hypothesis testing for multivariate data.
//!
//! The centerpiece is a multivariate extension of the Wilcoxon signed-rank
//! test: each paired observation contributes the perpendicular bisector of
//! the segment joining its two points, the per-pair hyperplanes are
//! aggregated into a single scoring rule through a coefficient-wise
//! Hodges-Lehmann pseudomedian over their pairwise averages, and the
//! univariate signed-rank test is applied to the score differences. The
//! rule's normalized coefficients double as a per-feature importance
//! profile of the detected change.
//!
//! Alongside it live the classical baselines (paired Hotelling T-squared,
//! Bonferroni-corrected per-feature testing), a synthetic paired-data
//! generator, and a Monte-Carlo harness that races the methods over a
//! scenario grid.
//!
//! Everything is deterministic: fixed seeds reproduce data bit for bit,
//! rank arithmetic stays exact in floating point, and reports do not depend
//! on worker count.

pub mod baselines;
pub mod bench;
pub mod error;
pub mod matrix;
pub mod mwsr;
pub mod num;
pub mod sample;
pub mod synth;
pub mod wsr;

pub use error::{Error, Result};
