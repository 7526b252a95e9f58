//! Classical baselines: the paired Hotelling T-squared test and
//! Bonferroni-corrected per-feature testing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{f_cdf, sample_covariance, spd_solve, t_cdf};
use crate::sample::{differences, PairedSample};
use crate::wsr::{wsr_test, Method, TestOutcome, WsrMode};

/// Univariate test applied per feature by [`multiple_testing`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UniTest {
    Wsr,
    TTest,
}

impl std::fmt::Display for UniTest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UniTest::Wsr => "wsr",
            UniTest::TTest => "t-test",
        })
    }
}

/// Outcome of Bonferroni-corrected per-feature testing.
#[derive(Debug, Clone, Serialize)]
pub struct MtResult {
    /// Raw (uncorrected) two-sided p-value per feature.
    pub per_feature_p: Vec<f64>,
    /// The Bonferroni threshold alpha / d applied to each raw p-value.
    pub corrected_alpha: f64,
    /// Indices of features significant after correction, ascending.
    pub significant_features: Vec<usize>,
    /// True if any feature survives the correction.
    pub overall_significant: bool,
    pub uni_test: UniTest,
    /// Features whose differences were all zero (p fixed at 1) or had zero
    /// variance around a nonzero mean (p fixed at 0 for the t-test).
    pub degenerate_features: Vec<usize>,
}

/// Paired Hotelling T-squared test: T2 = N zbar' S^-1 zbar on the
/// differences z = y - x, referred to an F distribution with (d, N - d)
/// degrees of freedom.
///
/// The statistic field of the outcome is the F value; the effect size is T2
/// itself. When d >= N the difference covariance is rank-deficient and the
/// test fails with a singular-covariance error.
pub fn hotelling_t2_paired(sample: &PairedSample, alpha: f64) -> Result<TestOutcome> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument {
            message: format!("alpha must lie in (0, 1), got {alpha}"),
        });
    }
    let (n, d) = (sample.n(), sample.d());
    if n < 2 {
        return Err(Error::InvalidArgument {
            message: format!("Hotelling test requires at least 2 pairs, got {n}"),
        });
    }
    let z = differences(sample);
    let mut mean = vec![0.0; d];
    for row in z.z().iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let cov = sample_covariance(z.z())?;
    let solved = spd_solve(&cov, &mean).map_err(|e| match e {
        Error::SingularMatrix { .. } => Error::SingularCovariance {
            pairs: n,
            features: d,
        },
        other => other,
    })?;
    let t2 = (n as f64
        * mean
            .iter()
            .zip(&solved)
            .map(|(a, b)| a * b)
            .sum::<f64>())
    .max(0.0);
    if n <= d {
        // Unreachable when the pivot check works: rank(S) <= n - 1 < d.
        return Err(Error::SingularCovariance {
            pairs: n,
            features: d,
        });
    }
    let f_stat = t2 * (n - d) as f64 / (d * (n - 1)) as f64;
    let p_value = (1.0 - f_cdf(f_stat, d, n - d)?).clamp(0.0, 1.0);
    Ok(TestOutcome {
        statistic: f_stat,
        p_value,
        effect_size: t2,
        alpha,
        significant: p_value < alpha,
        method: Method::Ht2,
    })
}

/// Two-sided paired t p-value for one feature's differences, plus a flag for
/// the zero-variance degeneracies.
fn paired_t_pvalue(z: &[f64], n: usize) -> Result<(f64, bool)> {
    let nf = n as f64;
    let mean: f64 = z.iter().sum::<f64>() / nf;
    let var: f64 = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    if var == 0.0 {
        // All differences identical: no spread to test against. A zero mean
        // carries no evidence (p = 1); a nonzero constant shift is certain
        // (p = 0 in the limit).
        return Ok(if mean == 0.0 { (1.0, true) } else { (0.0, true) });
    }
    let t = mean / (var / nf).sqrt();
    let p = (2.0 * t_cdf(-t.abs(), n - 1)?).min(1.0);
    Ok((p, false))
}

/// Bonferroni-corrected per-feature testing: runs the chosen univariate test
/// on each feature's differences and compares the raw p-values against
/// alpha / d. The overall null is rejected when any feature survives.
///
/// Features whose differences are all zero are reported with p = 1 and
/// flagged as degenerate rather than failing the whole procedure.
pub fn multiple_testing(sample: &PairedSample, alpha: f64, uni_test: UniTest) -> Result<MtResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument {
            message: format!("alpha must lie in (0, 1), got {alpha}"),
        });
    }
    let (n, d) = (sample.n(), sample.d());
    if n < 2 {
        return Err(Error::InvalidArgument {
            message: format!("multiple testing requires at least 2 pairs, got {n}"),
        });
    }
    let z = differences(sample);
    let corrected_alpha = alpha / d as f64;
    let mut per_feature_p = Vec::with_capacity(d);
    let mut degenerate_features = Vec::new();
    for k in 0..d {
        let col = z.column(k);
        let (p, degenerate) = match uni_test {
            UniTest::Wsr => match wsr_test(&col, 0.0, alpha, WsrMode::Auto) {
                Ok(out) => (out.p_value, false),
                Err(Error::AllZeroDifferences) => (1.0, true),
                Err(other) => return Err(other),
            },
            UniTest::TTest => paired_t_pvalue(&col, n)?,
        };
        if degenerate {
            degenerate_features.push(k);
        }
        per_feature_p.push(p);
    }
    let significant_features: Vec<usize> = per_feature_p
        .iter()
        .enumerate()
        .filter(|(_, p)| **p < corrected_alpha)
        .map(|(k, _)| k)
        .collect();
    let overall_significant = !significant_features.is_empty();
    Ok(MtResult {
        per_feature_p,
        corrected_alpha,
        significant_features,
        overall_significant,
        uni_test,
        degenerate_features,
    })
}
