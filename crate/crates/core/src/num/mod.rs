//! Numeric kernels: ranking, medians, special functions, and the small
//! amount of linear algebra the tests need.

pub mod linalg;
pub mod special;

pub use linalg::{dominant_eigenvector, sample_covariance, spd_solve, SPD_PIVOT_REL_TOL};
pub use special::{
    betainc, erf, erfc, f_cdf, ln_gamma, normal_cdf, normal_quantile, t_cdf,
};

use crate::error::{Error, Result};

/// Ranks of a sample with ties resolved by midranks.
///
/// Ranks are 1-based; a group of `t` equal values spanning sorted positions
/// `s..s+t` all receive rank `s + (t + 1) / 2`. The sum of all ranks is
/// always `n (n + 1) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankVector {
    ranks: Vec<f64>,
    tied: bool,
    /// Sum of t^3 - t over tie groups, used by the tie-corrected variance of
    /// rank statistics.
    tie_term: f64,
}

impl RankVector {
    pub fn ranks(&self) -> &[f64] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// True if any two values shared a rank.
    pub fn has_ties(&self) -> bool {
        self.tied
    }

    pub fn tie_term(&self) -> f64 {
        self.tie_term
    }
}

/// Midranks of `values`: equal values share the average of the ranks they
/// would occupy.
pub fn midranks(values: &[f64]) -> Result<RankVector> {
    if values.is_empty() {
        return Err(Error::EmptyInput {
            context: "midranks of an empty vector",
        });
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument {
            message: format!("midranks requires finite values, got {bad}"),
        });
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut ranks = vec![0.0; values.len()];
    let mut tied = false;
    let mut tie_term = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end (0-based) hold ranks start+1..end, whose
        // average is (start + end + 1) / 2 — exact in binary arithmetic.
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        let t = (end - start) as f64;
        if end - start > 1 {
            tied = true;
            tie_term += t * t * t - t;
        }
        start = end;
    }
    Ok(RankVector {
        ranks,
        tied,
        tie_term,
    })
}

/// Median as the lower-upper average: the middle order statistic for odd
/// lengths, the arithmetic mean of the two central order statistics for even
/// lengths.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput {
            context: "median of an empty vector",
        });
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument {
            message: format!("median requires finite values, got {bad}"),
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        Ok(sorted[n / 2])
    } else {
        Ok((sorted[n / 2 - 1] + sorted[n / 2]) / 2.0)
    }
}
