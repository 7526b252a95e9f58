//! Univariate Wilcoxon signed-rank test and the Hodges-Lehmann estimator.
//!
//! The test statistic is T+ = sum of the ranks of the positive differences,
//! where ranks are midranks of the absolute differences and exact zeros are
//! dropped before ranking. Small samples use the exact null distribution of
//! T+ (a subset-sum convolution over the ranks 1..n); larger samples or tied
//! data use the normal approximation with continuity and tie corrections.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::{self, normal_cdf};

/// Largest effective sample size for which the exact null distribution is
/// used; beyond this the normal approximation is both accurate and cheap.
pub const EXACT_MODE_CAP: usize = 25;

/// Which p-value computation `wsr_test` applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WsrMode {
    /// Exact for tie-free samples up to [`EXACT_MODE_CAP`], normal otherwise.
    Auto,
    /// Exact null distribution; errors above the cap, falls back to the
    /// normal approximation when ties make the exact distribution invalid.
    Exact,
    /// Normal approximation with continuity and tie corrections.
    Normal,
}

/// Identifies the procedure that produced a [`TestOutcome`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    WsrExact,
    WsrNormal,
    Ht2,
    MtBonferroni,
    Mwsr,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Method::WsrExact => "wsr-exact",
            Method::WsrNormal => "wsr-normal",
            Method::Ht2 => "ht2",
            Method::MtBonferroni => "mt-bonferroni",
            Method::Mwsr => "mwsr",
        };
        f.write_str(name)
    }
}

/// The signed-rank statistic together with everything the p-value
/// computations need to know about how it was formed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WsrStatistic {
    /// Sum of midranks of the positive differences.
    pub t_plus: f64,
    /// Number of nonzero differences that entered the ranking.
    pub n_effective: usize,
    /// True if any absolute differences were tied.
    pub had_ties: bool,
    /// True if any exact-zero differences were dropped.
    pub had_zeros: bool,
    /// Sum of t^3 - t over tie groups, for the tie-corrected variance.
    pub tie_term: f64,
}

/// Result of a significance test, shared by every method in the toolkit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
    /// Hodges-Lehmann shift estimate for rank tests, T-squared for the
    /// Hotelling baseline.
    pub effect_size: f64,
    pub alpha: f64,
    pub significant: bool,
    pub method: Method,
}

/// Computes T+ for the differences `z` against the hypothesized shift
/// `theta0`: zeros are dropped, absolute values are midranked, and the ranks
/// of the positive differences are summed.
pub fn signed_rank_statistic(z: &[f64], theta0: f64) -> Result<WsrStatistic> {
    if z.is_empty() {
        return Err(Error::EmptyInput {
            context: "signed-rank statistic of an empty sample",
        });
    }
    if !theta0.is_finite() {
        return Err(Error::InvalidArgument {
            message: format!("theta0 must be finite, got {theta0}"),
        });
    }
    if let Some(bad) = z.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument {
            message: format!("signed-rank statistic requires finite differences, got {bad}"),
        });
    }
    let shifted: Vec<f64> = z.iter().map(|v| v - theta0).collect();
    let nonzero: Vec<f64> = shifted.iter().copied().filter(|v| *v != 0.0).collect();
    let had_zeros = nonzero.len() != shifted.len();
    if nonzero.is_empty() {
        return Err(Error::AllZeroDifferences);
    }
    let abs: Vec<f64> = nonzero.iter().map(|v| v.abs()).collect();
    let ranks = num::midranks(&abs)?;
    let t_plus = nonzero
        .iter()
        .zip(ranks.ranks())
        .filter(|(v, _)| **v > 0.0)
        .map(|(_, r)| r)
        .sum();
    Ok(WsrStatistic {
        t_plus,
        n_effective: nonzero.len(),
        had_ties: ranks.has_ties(),
        had_zeros,
        tie_term: ranks.tie_term(),
    })
}

/// Exact null distribution of T+ for `n` tie-free nonzero differences:
/// entry t is P(T+ = t) under the null, t = 0..n(n+1)/2.
///
/// Computed by the subset-sum convolution over ranks 1..n; the counts are
/// integers below 2^53 for any practical n, so the probabilities are exact
/// dyadic fractions.
pub fn exact_null_distribution(n: usize) -> Vec<f64> {
    let max_t = n * (n + 1) / 2;
    let mut counts = vec![0.0f64; max_t + 1];
    counts[0] = 1.0;
    for k in 1..=n {
        for t in (k..=max_t).rev() {
            counts[t] += counts[t - k];
        }
    }
    let scale = 0.5f64.powi(n as i32);
    for c in &mut counts {
        *c *= scale;
    }
    counts
}

/// Two-sided exact p-value: 2 * min(P(T+ <= t), P(T+ >= t)), clamped to 1.
pub fn wsr_exact_pvalue(stat: &WsrStatistic) -> Result<f64> {
    if stat.had_ties {
        return Err(Error::TiesInExactMode);
    }
    if stat.n_effective > EXACT_MODE_CAP {
        return Err(Error::ExactModeCap {
            n: stat.n_effective,
            cap: EXACT_MODE_CAP,
        });
    }
    let dist = exact_null_distribution(stat.n_effective);
    let t = stat.t_plus.round() as usize;
    debug_assert!((stat.t_plus - t as f64).abs() == 0.0, "tie-free T+ is integral");
    let lower: f64 = dist[..=t].iter().sum();
    let upper: f64 = dist[t..].iter().sum();
    Ok((2.0 * lower.min(upper)).min(1.0))
}

/// Two-sided normal-approximation p-value with a half-unit continuity
/// correction and the standard tie correction of the variance.
pub fn wsr_normal_pvalue(stat: &WsrStatistic) -> Result<f64> {
    let n = stat.n_effective as f64;
    if stat.n_effective == 0 {
        return Err(Error::AllZeroDifferences);
    }
    let mean = n * (n + 1.0) / 4.0;
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - stat.tie_term / 48.0;
    if !(var > 0.0) {
        return Err(Error::InvalidArgument {
            message: format!("degenerate rank variance {var}"),
        });
    }
    let diff = stat.t_plus - mean;
    let z = (diff.abs() - 0.5).max(0.0) / var.sqrt();
    Ok((2.0 * normal_cdf(-z)).min(1.0))
}

/// All Walsh averages (z_i + z_j) / 2 for i <= j, including i == j.
pub fn walsh_averages(z: &[f64]) -> Vec<f64> {
    let n = z.len();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push((z[i] + z[j]) / 2.0);
        }
    }
    out
}

/// Hodges-Lehmann estimator: the median of all Walsh averages.
pub fn hodges_lehmann(z: &[f64]) -> Result<f64> {
    num::median(&walsh_averages(z))
}

/// Two-sided Wilcoxon signed-rank test of the hypothesis that the
/// differences `z` are symmetric about `theta0`.
///
/// The effect size is the Hodges-Lehmann estimate of the location of `z`
/// itself (not shifted by `theta0`).
pub fn wsr_test(z: &[f64], theta0: f64, alpha: f64, mode: WsrMode) -> Result<TestOutcome> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument {
            message: format!("alpha must lie in (0, 1), got {alpha}"),
        });
    }
    let stat = signed_rank_statistic(z, theta0)?;
    let use_exact = match mode {
        WsrMode::Auto => stat.n_effective <= EXACT_MODE_CAP && !stat.had_ties,
        WsrMode::Exact => {
            if stat.n_effective > EXACT_MODE_CAP {
                return Err(Error::ExactModeCap {
                    n: stat.n_effective,
                    cap: EXACT_MODE_CAP,
                });
            }
            // Ties invalidate the exact distribution; the normal
            // approximation is the defined fallback and the outcome's
            // method field records that it was taken.
            !stat.had_ties
        }
        WsrMode::Normal => false,
    };
    let (p_value, method) = if use_exact {
        (wsr_exact_pvalue(&stat)?, Method::WsrExact)
    } else {
        (wsr_normal_pvalue(&stat)?, Method::WsrNormal)
    };
    let effect_size = hodges_lehmann(z)?;
    Ok(TestOutcome {
        statistic: stat.t_plus,
        p_value,
        effect_size,
        alpha,
        significant: p_value < alpha,
        method,
    })
}
