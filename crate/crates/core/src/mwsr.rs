//! Multivariate signed-rank test built from bisecting hyperplanes.
//!
//! Step 1 turns every pair (x_i, y_i) into the hyperplane that
//! perpendicularly bisects the segment from x_i to y_i. Before averaging,
//! the per-pair rules are re-oriented into a common half-space: the
//! reference direction is the dominant eigenvector of their unsigned
//! second-moment matrix, which is blind to each pair's own x-to-y ordering,
//! so under the null the score-difference signs stay exchangeable and the
//! rank test keeps its exact level. The Walsh averages of the oriented
//! hyperplanes are then reduced coefficient-wise by the median into a
//! single pseudomedian scoring rule. Step 2 scores both samples by signed
//! distance to that rule and runs the univariate signed-rank test on the
//! score differences; the aggregate's overall sign is fixed so the reported
//! effect size is nonnegative, making importance signs point along the
//! detected change from the first sample to the second.
//!
//! In one dimension the construction collapses to the classical picture:
//! every oriented bisector has w = 1, the negated intercept of the rule is
//! the Hodges-Lehmann estimate of the pair midpoints, and the rank test sees
//! exactly the differences y - x — all up to the single overall sign that
//! keeps the reported effect nonnegative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::num;
use crate::sample::PairedSample;
use crate::wsr::{self, Method, TestOutcome, WsrMode};

/// A pair is treated as degenerate when every coordinate of the two points
/// agrees to this relative tolerance; its bisector direction would be pure
/// rounding noise.
pub const DEGENERATE_PAIR_REL_TOL: f64 = 1e-12;

/// How the per-pair hyperplane coefficients are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BisectorScale {
    /// Unit-norm coefficient vector: every pair contributes a pure
    /// direction, regardless of how far apart the two points are.
    Unit,
    /// Coefficients keep the raw length of y - x, so distant pairs pull the
    /// pseudomedian harder.
    Raw,
}

/// What `mwsr_test` does when it encounters a coincident pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegeneratePolicy {
    /// Skip the pair when building the rule (it still gets scored; its score
    /// difference is zero and the rank test drops it).
    Drop,
    /// Fail with the row index of the first coincident pair.
    Abort,
}

/// An affine decision rule w . x + b = 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hyperplane {
    pub w: Vec<f64>,
    pub b: f64,
}

impl Hyperplane {
    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// The (unnormalized) decision value w . x + b.
    pub fn decision_value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.w.len());
        let dot: f64 = self.w.iter().zip(x).map(|(wk, xk)| wk * xk).sum();
        dot + self.b
    }

    fn norm(&self) -> f64 {
        self.w.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Scores of both samples under a common rule: `s1[i]` and `s2[i]` are the
/// signed distances of x_i and y_i to the rule's hyperplane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScorePair {
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
}

impl ScorePair {
    /// Per-pair score differences s2 - s1, the input of the rank test.
    pub fn differences(&self) -> Vec<f64> {
        self.s1
            .iter()
            .zip(&self.s2)
            .map(|(a, b)| b - a)
            .collect()
    }
}

/// Options for [`mwsr_test_with`].
#[derive(Debug, Clone, Copy)]
pub struct MwsrOptions {
    pub alpha: f64,
    pub degenerate_policy: DegeneratePolicy,
    pub bisector_scale: BisectorScale,
    /// Mode passed through to the signed-rank test on score differences.
    pub mode: WsrMode,
}

impl Default for MwsrOptions {
    fn default() -> Self {
        MwsrOptions {
            alpha: 0.05,
            degenerate_policy: DegeneratePolicy::Drop,
            bisector_scale: BisectorScale::Unit,
            mode: WsrMode::Auto,
        }
    }
}

/// Everything the multivariate test produces.
#[derive(Debug, Clone, Serialize)]
pub struct MwsrResult {
    /// The pseudomedian scoring rule.
    pub rule: Hyperplane,
    /// Scores of every pair under the rule (including dropped pairs).
    pub scores: ScorePair,
    /// Significance of the rank test on score differences; `method` is
    /// [`Method::Mwsr`].
    pub outcome: TestOutcome,
    /// Unit-norm feature importance, the normalized rule coefficients.
    pub importance: Vec<f64>,
    /// Importance scaled by the score-shift estimate: the estimated
    /// displacement along the rule direction.
    pub effect_vector: Vec<f64>,
    /// Rows skipped as degenerate under [`DegeneratePolicy::Drop`].
    pub dropped_pairs: Vec<usize>,
    /// Which univariate procedure scored the differences
    /// ([`Method::WsrExact`] or [`Method::WsrNormal`]).
    pub score_test_method: Method,
}

fn pair_is_degenerate(x: &[f64], y: &[f64]) -> bool {
    x.iter()
        .zip(y)
        .all(|(a, b)| (b - a).abs() <= DEGENERATE_PAIR_REL_TOL * a.abs().max(b.abs()))
}

fn bisector_scaled(x: &[f64], y: &[f64], scale: BisectorScale) -> Hyperplane {
    let diff: Vec<f64> = y.iter().zip(x).map(|(b, a)| b - a).collect();
    let w: Vec<f64> = match scale {
        BisectorScale::Unit => {
            let norm = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
            diff.iter().map(|v| v / norm).collect()
        }
        BisectorScale::Raw => diff,
    };
    // The plane passes through the midpoint: b = -w . (x + y) / 2.
    let b = -w
        .iter()
        .zip(x.iter().zip(y))
        .map(|(wk, (xk, yk))| wk * ((xk + yk) / 2.0))
        .sum::<f64>();
    Hyperplane { w, b }
}

/// The hyperplane that perpendicularly bisects the segment from `x` to `y`,
/// with a unit-norm coefficient vector pointing from `x` toward `y`.
///
/// Both points are equidistant from the plane, `y` on the positive side.
/// Coincident points have no bisector; for this standalone entry point the
/// degenerate-pair error reports row 0.
pub fn perpendicular_bisector(x: &[f64], y: &[f64]) -> Result<Hyperplane> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
            context: "bisector endpoints",
        });
    }
    if x.is_empty() {
        return Err(Error::EmptyInput {
            context: "bisector of zero-dimensional points",
        });
    }
    if pair_is_degenerate(x, y) {
        return Err(Error::DegeneratePair { row: 0 });
    }
    Ok(bisector_scaled(x, y, BisectorScale::Unit))
}

/// All Walsh averages of the rules: component-wise means
/// ((w_i + w_j) / 2, (b_i + b_j) / 2) for i <= j, including i == j.
///
/// The averaged coefficient vectors are deliberately not re-normalized.
pub fn walsh_hyperplane_averages(rules: &[Hyperplane]) -> Result<Vec<Hyperplane>> {
    let Some(first) = rules.first() else {
        return Err(Error::EmptyInput {
            context: "Walsh averages of zero hyperplanes",
        });
    };
    let d = first.dim();
    for r in rules {
        if r.dim() != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: r.dim(),
                context: "hyperplane dimensions",
            });
        }
    }
    let n = rules.len();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let w = rules[i]
                .w
                .iter()
                .zip(&rules[j].w)
                .map(|(a, b)| (a + b) / 2.0)
                .collect();
            let b = (rules[i].b + rules[j].b) / 2.0;
            out.push(Hyperplane { w, b });
        }
    }
    Ok(out)
}

/// The pseudomedian rule: the coefficient-wise median over all Walsh
/// averages of the rules, taken independently for each coefficient and for
/// the intercept.
pub fn pseudomedian_rule(rules: &[Hyperplane]) -> Result<Hyperplane> {
    let averages = walsh_hyperplane_averages(rules)?;
    let d = averages[0].dim();
    let mut w = Vec::with_capacity(d);
    let mut buf = Vec::with_capacity(averages.len());
    for k in 0..d {
        buf.clear();
        buf.extend(averages.iter().map(|h| h.w[k]));
        w.push(num::median(&buf)?);
    }
    buf.clear();
    buf.extend(averages.iter().map(|h| h.b));
    let b = num::median(&buf)?;
    Ok(Hyperplane { w, b })
}

/// Signed distances of both samples to the rule's hyperplane:
/// (w . x + b) / ||w||.
pub fn score(rule: &Hyperplane, sample: &PairedSample) -> Result<ScorePair> {
    if rule.dim() != sample.d() {
        return Err(Error::DimensionMismatch {
            left: rule.dim(),
            right: sample.d(),
            context: "rule dimension vs sample features",
        });
    }
    let norm = rule.norm();
    if !(norm > 0.0) {
        return Err(Error::DegenerateRule);
    }
    let n = sample.n();
    let mut s1 = Vec::with_capacity(n);
    let mut s2 = Vec::with_capacity(n);
    for i in 0..n {
        s1.push(rule.decision_value(sample.x().row(i)) / norm);
        s2.push(rule.decision_value(sample.y().row(i)) / norm);
    }
    Ok(ScorePair { s1, s2 })
}

/// Normalized rule coefficients w / ||w||; the signed per-feature weights of
/// the decision direction.
pub fn feature_importance(rule: &Hyperplane) -> Result<Vec<f64>> {
    let norm = rule.norm();
    if !(norm > 0.0) {
        return Err(Error::DegenerateRule);
    }
    Ok(rule.w.iter().map(|v| v / norm).collect())
}

/// The multivariate signed-rank test with default options (bisectors of
/// unit scale, automatic choice of the exact or normal rank test).
pub fn mwsr_test(
    sample: &PairedSample,
    alpha: f64,
    policy: DegeneratePolicy,
) -> Result<MwsrResult> {
    mwsr_test_with(
        sample,
        &MwsrOptions {
            alpha,
            degenerate_policy: policy,
            ..MwsrOptions::default()
        },
    )
}

/// Re-orients the rules into a common half-space. The reference direction
/// is the dominant eigenvector of the unsigned second-moment matrix
/// sum_i w_i w_i', which does not depend on which point of any pair came
/// first; a rule with a negative dot against it flips to (-w, -b), the same
/// plane with reversed orientation. An exactly zero dot keeps the rule
/// as constructed.
fn align_orientations(rules: &mut [Hyperplane]) -> Result<()> {
    let d = rules[0].dim();
    let mut m = Matrix::zeros(d, d);
    for rule in rules.iter() {
        for r in 0..d {
            for c in r..d {
                m[(r, c)] += rule.w[r] * rule.w[c];
            }
        }
    }
    for r in 0..d {
        for c in 0..r {
            m[(r, c)] = m[(c, r)];
        }
    }
    let reference = num::dominant_eigenvector(&m)?;
    for rule in rules.iter_mut() {
        let dot: f64 = rule.w.iter().zip(&reference).map(|(a, b)| a * b).sum();
        if dot < 0.0 {
            for v in &mut rule.w {
                *v = -*v;
            }
            rule.b = -rule.b;
        }
    }
    Ok(())
}

/// The multivariate signed-rank test.
///
/// Builds one bisecting hyperplane per non-degenerate pair, re-orients them
/// into a common half-space (see [`align_orientations`]' contract: the
/// reference ignores pair ordering, which preserves the rank test's exact
/// level under the null), reduces them to the pseudomedian rule, scores the
/// full sample, and runs the univariate signed-rank test on the score
/// differences. If the Hodges-Lehmann estimate of the score differences is
/// negative the whole rule is negated first, so the reported effect size is
/// always nonnegative and importance signs follow the detected change.
/// Degenerate pairs are dropped or abort per the policy; dropped pairs
/// still receive scores, contribute zero score difference, and are
/// therefore excluded by the rank test's zero-drop convention.
pub fn mwsr_test_with(sample: &PairedSample, opts: &MwsrOptions) -> Result<MwsrResult> {
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(Error::InvalidArgument {
            message: format!("alpha must lie in (0, 1), got {}", opts.alpha),
        });
    }
    let n = sample.n();
    let mut rules = Vec::with_capacity(n);
    let mut dropped = Vec::new();
    for i in 0..n {
        let (x, y) = (sample.x().row(i), sample.y().row(i));
        if pair_is_degenerate(x, y) {
            match opts.degenerate_policy {
                DegeneratePolicy::Abort => return Err(Error::DegeneratePair { row: i }),
                DegeneratePolicy::Drop => dropped.push(i),
            }
        } else {
            rules.push(bisector_scaled(x, y, opts.bisector_scale));
        }
    }
    if rules.len() < 2 {
        return Err(Error::InsufficientPairs {
            found: rules.len(),
        });
    }
    align_orientations(&mut rules)?;
    let mut rule = pseudomedian_rule(&rules)?;
    let mut scores = score(&rule, sample)?;
    let mut diffs = scores.differences();
    if wsr::hodges_lehmann(&diffs)? < 0.0 {
        for v in &mut rule.w {
            *v = -*v;
        }
        rule.b = -rule.b;
        for v in &mut scores.s1 {
            *v = -*v;
        }
        for v in &mut scores.s2 {
            *v = -*v;
        }
        diffs = scores.differences();
    }
    let uni = wsr::wsr_test(&diffs, 0.0, opts.alpha, opts.mode)?;
    let importance = feature_importance(&rule)?;
    let effect_vector = importance.iter().map(|w| uni.effect_size * w).collect();
    let score_test_method = uni.method;
    let outcome = TestOutcome {
        method: Method::Mwsr,
        ..uni
    };
    Ok(MwsrResult {
        rule,
        scores,
        outcome,
        importance,
        effect_vector,
        dropped_pairs: dropped,
        score_test_method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::wsr::{hodges_lehmann, wsr_test};
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn uniform(rng: &mut ChaCha8Rng) -> f64 {
        ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    fn sample_from(x: Vec<Vec<f64>>, y: Vec<Vec<f64>>) -> PairedSample {
        let d = x[0].len();
        let names = (1..=d).map(|k| format!("f{k}")).collect();
        PairedSample::new(
            Matrix::from_rows(x).unwrap(),
            Matrix::from_rows(y).unwrap(),
            names,
        )
        .unwrap()
    }

    #[test]
    fn bisector_axis_aligned_example() {
        let h = perpendicular_bisector(&[0.0, 0.0], &[2.0, 0.0]).unwrap();
        assert_eq!(h.w, vec![1.0, 0.0]);
        assert_eq!(h.b, -1.0);
        assert_eq!(h.decision_value(&[0.0, 0.0]), -1.0);
        assert_eq!(h.decision_value(&[2.0, 0.0]), 1.0);
        assert_eq!(h.decision_value(&[1.0, 7.0]), 0.0);
    }

    #[test]
    fn bisector_diagonal_example() {
        let h = perpendicular_bisector(&[1.0, 1.0], &[3.0, 3.0]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((h.w[0] - s).abs() < 1e-15);
        assert!((h.w[1] - s).abs() < 1e-15);
        // Midpoint (2, 2) lies on the plane.
        assert!(h.decision_value(&[2.0, 2.0]).abs() < 1e-15);
    }

    #[test]
    fn bisector_one_dimensional() {
        // x = 1, y = 3: w = 1, plane at the midpoint 2, so b = -2.
        let h = perpendicular_bisector(&[1.0], &[3.0]).unwrap();
        assert_eq!(h.w, vec![1.0]);
        assert_eq!(h.b, -2.0);
        // Swapping the points flips the orientation.
        let h = perpendicular_bisector(&[3.0], &[1.0]).unwrap();
        assert_eq!(h.w, vec![-1.0]);
        assert_eq!(h.b, 2.0);
    }

    #[test]
    fn bisector_rejects_coincident_and_mismatched_points() {
        assert!(matches!(
            perpendicular_bisector(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::DegeneratePair { row: 0 })
        ));
        assert!(matches!(
            perpendicular_bisector(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(perpendicular_bisector(&[], &[]).is_err());
    }

    #[test]
    fn bisector_equidistance_and_orientation_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let d = 1 + (rng.next_u64() % 6) as usize;
            let x: Vec<f64> = (0..d).map(|_| uniform(&mut rng) * 10.0 - 5.0).collect();
            let y: Vec<f64> = (0..d).map(|_| uniform(&mut rng) * 10.0 - 5.0).collect();
            if pair_is_degenerate(&x, &y) {
                continue;
            }
            let h = perpendicular_bisector(&x, &y).unwrap();
            // Unit norm.
            assert!((h.norm() - 1.0).abs() < 1e-12);
            let dx = h.decision_value(&x);
            let dy = h.decision_value(&y);
            // Equidistant, y on the positive side.
            assert!((dx.abs() - dy.abs()).abs() < 1e-10);
            assert!(dy > 0.0 && dx < 0.0);
            // The midpoint lies on the plane.
            let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (a + b) / 2.0).collect();
            let scale = 1.0 + mid.iter().map(|v| v.abs()).fold(0.0, f64::max);
            assert!(h.decision_value(&mid).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn walsh_hyperplane_averages_structure() {
        let a = Hyperplane {
            w: vec![1.0, 0.0],
            b: -1.0,
        };
        let c = Hyperplane {
            w: vec![0.0, 1.0],
            b: 3.0,
        };
        let avgs = walsh_hyperplane_averages(&[a.clone(), c]).unwrap();
        assert_eq!(avgs.len(), 3);
        // Self-average first: the rule itself.
        assert_eq!(avgs[0], a);
        // Cross average is the component-wise mean, not re-normalized.
        assert_eq!(avgs[1].w, vec![0.5, 0.5]);
        assert_eq!(avgs[1].b, 1.0);
        assert_eq!(avgs[2].w, vec![0.0, 1.0]);
    }

    #[test]
    fn walsh_hyperplane_averages_validation() {
        assert!(walsh_hyperplane_averages(&[]).is_err());
        let a = Hyperplane {
            w: vec![1.0],
            b: 0.0,
        };
        let c = Hyperplane {
            w: vec![1.0, 0.0],
            b: 0.0,
        };
        assert!(matches!(
            walsh_hyperplane_averages(&[a, c]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pseudomedian_of_single_rule_is_the_rule() {
        let a = Hyperplane {
            w: vec![0.6, -0.8],
            b: 2.5,
        };
        assert_eq!(pseudomedian_rule(&[a.clone()]).unwrap(), a);
    }

    #[test]
    fn pseudomedian_matches_hodges_lehmann_in_one_dimension() {
        // Pairs with x < y all give w = 1 and b = -midpoint, so the
        // pseudomedian intercept is minus the Hodges-Lehmann estimate of
        // the midpoints.
        let mids = [1.0, 2.0, 6.0];
        let rules: Vec<Hyperplane> = mids
            .iter()
            .map(|m| perpendicular_bisector(&[m - 0.5], &[m + 0.5]).unwrap())
            .collect();
        let rule = pseudomedian_rule(&rules).unwrap();
        assert_eq!(rule.w, vec![1.0]);
        assert_eq!(rule.b, -2.75);
        assert_eq!(-rule.b, hodges_lehmann(&mids).unwrap());
    }

    #[test]
    fn pseudomedian_coefficients_are_bracketed() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let n = 2 + (rng.next_u64() % 8) as usize;
            let d = 1 + (rng.next_u64() % 4) as usize;
            let rules: Vec<Hyperplane> = (0..n)
                .map(|_| {
                    let x: Vec<f64> = (0..d).map(|_| uniform(&mut rng) * 4.0).collect();
                    let y: Vec<f64> = (0..d).map(|_| uniform(&mut rng) * 4.0 + 0.5).collect();
                    perpendicular_bisector(&x, &y).unwrap()
                })
                .collect();
            let avgs = walsh_hyperplane_averages(&rules).unwrap();
            let rule = pseudomedian_rule(&rules).unwrap();
            for k in 0..d {
                let lo = avgs.iter().map(|h| h.w[k]).fold(f64::INFINITY, f64::min);
                let hi = avgs
                    .iter()
                    .map(|h| h.w[k])
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(lo <= rule.w[k] && rule.w[k] <= hi);
            }
        }
    }

    #[test]
    fn score_example() {
        let rule = Hyperplane {
            w: vec![1.0, 0.0],
            b: -1.0,
        };
        let s = sample_from(
            vec![vec![0.0, 5.0], vec![2.0, -3.0]],
            vec![vec![4.0, 1.0], vec![1.0, 0.0]],
        );
        let scores = score(&rule, &s).unwrap();
        assert_eq!(scores.s1, vec![-1.0, 1.0]);
        assert_eq!(scores.s2, vec![3.0, 0.0]);
        assert_eq!(scores.differences(), vec![4.0, -1.0]);
    }

    #[test]
    fn score_normalizes_by_coefficient_length() {
        // Doubling w and b leaves signed distances unchanged.
        let rule = Hyperplane {
            w: vec![2.0, 0.0],
            b: -2.0,
        };
        let s = sample_from(vec![vec![0.0, 9.0]], vec![vec![3.0, -4.0]]);
        let scores = score(&rule, &s).unwrap();
        assert_eq!(scores.s1, vec![-1.0]);
        assert_eq!(scores.s2, vec![2.0]);
    }

    #[test]
    fn score_rejects_zero_rule_and_dimension_mismatch() {
        let s = sample_from(vec![vec![1.0]], vec![vec![2.0]]);
        let zero = Hyperplane {
            w: vec![0.0],
            b: 1.0,
        };
        assert!(matches!(score(&zero, &s), Err(Error::DegenerateRule)));
        let wide = Hyperplane {
            w: vec![1.0, 1.0],
            b: 0.0,
        };
        assert!(matches!(
            score(&wide, &s),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn importance_is_unit_norm_and_sign_preserving() {
        let rule = Hyperplane {
            w: vec![3.0, -4.0],
            b: 7.0,
        };
        let imp = feature_importance(&rule).unwrap();
        assert_eq!(imp, vec![0.6, -0.8]);
        let neg = Hyperplane {
            w: vec![-3.0, 4.0],
            b: -7.0,
        };
        let imp_neg = feature_importance(&neg).unwrap();
        assert_eq!(imp_neg, vec![-0.6, 0.8]);
        let zero = Hyperplane {
            w: vec![0.0, 0.0],
            b: 1.0,
        };
        assert!(matches!(
            feature_importance(&zero),
            Err(Error::DegenerateRule)
        ));
    }

    #[test]
    fn one_dimensional_test_reduces_to_wsr_on_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = 5 + (rng.next_u64() % 20) as usize;
            // Strictly increasing pairs: every bisector has w = +1.
            let x: Vec<Vec<f64>> = (0..n).map(|_| vec![uniform(&mut rng) * 10.0]).collect();
            let y: Vec<Vec<f64>> = x
                .iter()
                .map(|r| vec![r[0] + 0.1 + uniform(&mut rng) * 3.0])
                .collect();
            let mids: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (a[0] + b[0]) / 2.0).collect();
            let s = sample_from(x, y);
            let res = mwsr_test(&s, 0.05, DegeneratePolicy::Abort).unwrap();
            assert_eq!(res.rule.w, vec![1.0]);
            assert!((-res.rule.b - hodges_lehmann(&mids).unwrap()).abs() < 1e-12);
            // The multivariate p-value is exactly the univariate one on the
            // score differences.
            let uni = wsr_test(&res.scores.differences(), 0.0, 0.05, WsrMode::Auto).unwrap();
            assert_eq!(res.outcome.p_value.to_bits(), uni.p_value.to_bits());
            assert_eq!(res.outcome.method, Method::Mwsr);
            assert_eq!(res.score_test_method, uni.method);
        }
    }

    #[test]
    fn one_dimensional_mixed_directions_still_reduce_to_wsr() {
        // Pairs moving both ways. Orientation flips the decreasing pairs'
        // bisectors, so every oriented rule is w = +1, b = -midpoint, and
        // the whole pipeline is bit-for-bit the univariate test on y - x.
        // Dyadic inputs keep every intermediate sum exact.
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let n = 15;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![(rng.next_u64() % 64) as f64 * 0.25])
            .collect();
        let y: Vec<Vec<f64>> = x
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let step = if i % 3 == 0 {
                    -0.25
                } else {
                    (1 + rng.next_u64() % 5) as f64 * 0.25
                };
                vec![r[0] + step]
            })
            .collect();
        let mids: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (a[0] + b[0]) / 2.0).collect();
        let diffs: Vec<f64> = x.iter().zip(&y).map(|(a, b)| b[0] - a[0]).collect();
        let s = sample_from(x.clone(), y);
        let res = mwsr_test(&s, 0.05, DegeneratePolicy::Abort).unwrap();
        let uni = wsr_test(&diffs, 0.0, 0.05, WsrMode::Auto).unwrap();
        assert_eq!(res.rule.w, vec![1.0]);
        assert_eq!(res.rule.b.to_bits(), (-hodges_lehmann(&mids).unwrap()).to_bits());
        assert_eq!(res.scores.differences(), diffs);
        assert_eq!(res.outcome.p_value.to_bits(), uni.p_value.to_bits());
        assert_eq!(res.outcome.statistic.to_bits(), uni.statistic.to_bits());
        assert_eq!(res.outcome.effect_size.to_bits(), uni.effect_size.to_bits());
        assert_eq!(res.importance, vec![1.0]);

        // Reversing every pair drifts the scores negative, so the global
        // sign flip reports the rule pointing down; the two-sided p-value
        // is unchanged from the univariate test on the new differences.
        let x2: Vec<Vec<f64>> = x
            .iter()
            .zip(&diffs)
            .map(|(r, d)| vec![r[0] + d])
            .collect();
        let y2 = x;
        let d2: Vec<f64> = x2.iter().zip(&y2).map(|(a, b)| b[0] - a[0]).collect();
        let s2 = sample_from(x2, y2);
        let res2 = mwsr_test(&s2, 0.05, DegeneratePolicy::Abort).unwrap();
        let uni2 = wsr_test(&d2, 0.0, 0.05, WsrMode::Auto).unwrap();
        assert_eq!(res2.rule.w, vec![-1.0]);
        assert_eq!(res2.importance, vec![-1.0]);
        assert_eq!(res2.outcome.p_value.to_bits(), uni2.p_value.to_bits());
        assert!(res2.outcome.effect_size >= 0.0);
        assert_eq!(
            (res2.outcome.effect_size + 0.0).to_bits(),
            (-uni2.effect_size + 0.0).to_bits()
        );
    }

    #[test]
    fn shift_on_a_trailing_feature_is_found_and_attributed() {
        // Only the last of five features moves. The oriented bisectors all
        // lean on that axis, so the rule concentrates its weight there and
        // the test fires.
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let n = 20;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..5).map(|_| uniform(&mut rng) * 4.0).collect())
            .collect();
        let y: Vec<Vec<f64>> = x
            .iter()
            .map(|r| {
                let mut row: Vec<f64> = r
                    .iter()
                    .map(|v| v + (uniform(&mut rng) - 0.5) * 0.4)
                    .collect();
                row[4] += 2.0;
                row
            })
            .collect();
        let s = sample_from(x, y);
        let res = mwsr_test(&s, 0.05, DegeneratePolicy::Abort).unwrap();
        assert!(res.outcome.significant);
        assert!(res.importance[4] > 0.95);
        for k in 0..4 {
            assert!(res.importance[k].abs() < 0.2);
        }
        assert!((res.effect_vector[4] - 2.0).abs() < 0.3);
    }

    #[test]
    fn negative_shift_reports_a_negative_direction() {
        // y = x - 1.5 on the first of three features, exactly. Every
        // bisector points down that axis; orientation flips them all to a
        // common frame, and the final sign convention flips the aggregate
        // back so the effect is positive and the importance points along
        // the actual change. Dyadic inputs make every value exact.
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let x: Vec<Vec<f64>> = (0..12)
            .map(|_| (0..3).map(|_| (rng.next_u64() % 33) as f64 * 0.25).collect())
            .collect();
        let y: Vec<Vec<f64>> = x
            .iter()
            .map(|r| vec![r[0] - 1.5, r[1], r[2]])
            .collect();
        let mids: Vec<f64> = x.iter().map(|r| r[0] - 0.75).collect();
        let s = sample_from(x, y);
        let res = mwsr_test(&s, 0.05, DegeneratePolicy::Abort).unwrap();
        assert_eq!(res.rule.w, vec![-1.0, 0.0, 0.0]);
        assert_eq!(res.rule.b.to_bits(), hodges_lehmann(&mids).unwrap().to_bits());
        assert_eq!(res.scores.differences(), vec![1.5; 12]);
        assert_eq!(res.outcome.effect_size, 1.5);
        assert_eq!(res.importance, vec![-1.0, 0.0, 0.0]);
        assert_eq!(res.effect_vector, vec![-1.5, 0.0, 0.0]);
        let uni = wsr_test(&vec![1.5; 12], 0.0, 0.05, WsrMode::Auto).unwrap();
        assert_eq!(res.outcome.p_value.to_bits(), uni.p_value.to_bits());
        assert!(res.outcome.significant);
    }

    #[test]
    fn level_is_held_on_exchangeable_null_data() {
        // Correlated pairs with no shift: the rejection rate over 100
        // fixed-seed trials stays near the nominal 5 percent.
        let mut rejections = 0;
        for trial in 0..100u64 {
            let cfg = crate::synth::ScenarioConfig {
                n: 20,
                d: 5,
                std: 1.0,
                rho: 0.5,
                shift: 0.0,
                shifted_fraction: 0.25,
                seed: crate::synth::derive_stream_seed(7, &[trial]),
            };
            let s = crate::synth::generate_scenario(&cfg).unwrap();
            let res = mwsr_test(&s, 0.05, DegeneratePolicy::Abort).unwrap();
            if res.outcome.significant {
                rejections += 1;
            }
        }
        assert!(rejections <= 12, "rejected {rejections} of 100 null trials");
    }

    #[test]
    fn detects_a_pure_translation() {
        // y = x + delta: every bisector shares the direction delta/|delta|,
        // all score differences equal |delta|, and the test is maximally
        // significant for this sample size.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let delta = [0.8, -0.6];
        let x: Vec<Vec<f64>> = (0..12)
            .map(|_| (0..2).map(|_| uniform(&mut rng) * 6.0).collect())
            .collect();
        let y: Vec<Vec<f64>> = x
            .iter()
            .map(|r| r.iter().zip(&delta).map(|(v, d)| v + d).collect())
            .collect();
        let s = sample_from(x, y);
        let res = mwsr_test(&s, 0.05, DegeneratePolicy::Abort).unwrap();
        assert!((res.rule.w[0] - 0.8).abs() < 1e-12);
        assert!((res.rule.w[1] + 0.6).abs() < 1e-12);
        for d in res.scores.differences() {
            assert!((d - 1.0).abs() < 1e-10);
        }
        assert!(res.outcome.significant);
        // Importance points along the translation.
        assert!((res.importance[0] - 0.8).abs() < 1e-12);
        assert!((res.importance[1] + 0.6).abs() < 1e-12);
        // Effect vector estimates the displacement itself.
        assert!((res.effect_vector[0] - 0.8).abs() < 1e-6);
        assert!((res.effect_vector[1] + 0.6).abs() < 1e-6);
    }

    #[test]
    fn degenerate_policies() {
        let x = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]];
        let mut y = x.clone();
        y[1] = vec![4.0, 5.0];
        y[2] = vec![6.0, 8.0];
        // Row 0 is coincident.
        let s = sample_from(x.clone(), y.clone());
        assert!(matches!(
            mwsr_test(&s, 0.05, DegeneratePolicy::Abort),
            Err(Error::DegeneratePair { row: 0 })
        ));
        let res = mwsr_test(&s, 0.05, DegeneratePolicy::Drop).unwrap();
        assert_eq!(res.dropped_pairs, vec![0]);
        // The dropped pair is still scored and its difference is zero.
        assert_eq!(res.scores.s1.len(), 3);
        assert_eq!(res.scores.differences()[0], 0.0);

        // All pairs coincident: abort reports the first row, drop runs out
        // of usable pairs.
        let s = sample_from(x.clone(), x.clone());
        assert!(matches!(
            mwsr_test(&s, 0.05, DegeneratePolicy::Abort),
            Err(Error::DegeneratePair { row: 0 })
        ));
        assert!(matches!(
            mwsr_test(&s, 0.05, DegeneratePolicy::Drop),
            Err(Error::InsufficientPairs { found: 0 })
        ));
    }

    #[test]
    fn opposite_directions_orient_coherently_and_cancel_in_rank() {
        // Two pairs moving in exactly opposite directions: orientation lines
        // both rules up along the first axis instead of letting the
        // coefficient medians cancel to the zero vector, and the balanced
        // score differences +1, -1 make the rank test maximally
        // insignificant.
        let s = sample_from(
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
        );
        let res = mwsr_test(&s, 0.05, DegeneratePolicy::Abort).unwrap();
        assert_eq!(res.rule.w, vec![1.0, 0.0]);
        assert_eq!(res.rule.b, 0.0);
        assert_eq!(res.scores.differences(), vec![1.0, -1.0]);
        assert_eq!(res.outcome.p_value, 1.0);
        assert!(!res.outcome.significant);
        assert_eq!(res.outcome.effect_size, 0.0);
    }

    #[test]
    fn translation_leaves_score_differences_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let shift = [3.25, -1.5, 0.75];
        let x: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..3).map(|_| uniform(&mut rng) * 4.0).collect())
            .collect();
        let y: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..3).map(|_| uniform(&mut rng) * 4.0 + 0.3).collect())
            .collect();
        let s = sample_from(x.clone(), y.clone());
        let xt = x
            .iter()
            .map(|r| r.iter().zip(&shift).map(|(v, s)| v + s).collect())
            .collect();
        let yt = y
            .iter()
            .map(|r| r.iter().zip(&shift).map(|(v, s)| v + s).collect())
            .collect();
        let st = sample_from(xt, yt);
        let a = mwsr_test(&s, 0.05, DegeneratePolicy::Abort).unwrap();
        let b = mwsr_test(&st, 0.05, DegeneratePolicy::Abort).unwrap();
        let da = a.scores.differences();
        let db = b.scores.differences();
        for (u, v) in da.iter().zip(&db) {
            assert!((u - v).abs() < 1e-10);
        }
        assert!((a.outcome.p_value - b.outcome.p_value).abs() < 1e-12);
        for (u, v) in a.rule.w.iter().zip(&b.rule.w) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn raw_scale_bisectors_weight_by_distance() {
        let x = vec![vec![0.0], vec![0.0], vec![0.0]];
        let y = vec![vec![1.0], vec![2.0], vec![10.0]];
        let s = sample_from(x, y);
        let res = mwsr_test_with(
            &s,
            &MwsrOptions {
                bisector_scale: BisectorScale::Raw,
                ..MwsrOptions::default()
            },
        )
        .unwrap();
        // Raw coefficients are the pair distances 1, 2, 10; the pseudomedian
        // coefficient is the Hodges-Lehmann estimate of those lengths.
        assert_eq!(res.rule.w[0], hodges_lehmann(&[1.0, 2.0, 10.0]).unwrap());
        // Scores are still normalized distances, so significance logic is
        // unchanged in one dimension.
        let unit = mwsr_test(&s, 0.05, DegeneratePolicy::Abort).unwrap();
        assert_eq!(
            res.outcome.p_value.to_bits(),
            unit.outcome.p_value.to_bits()
        );
    }

    #[test]
    fn mwsr_validates_alpha_and_pair_count() {
        let s = sample_from(vec![vec![1.0]], vec![vec![2.0]]);
        assert!(matches!(
            mwsr_test(&s, 0.0, DegeneratePolicy::Drop),
            Err(Error::InvalidArgument { .. })
        ));
        assert!(matches!(
            mwsr_test(&s, 0.05, DegeneratePolicy::Drop),
            Err(Error::InsufficientPairs { found: 1 })
        ));
    }
}
