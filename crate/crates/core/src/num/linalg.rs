//! Covariance estimation and a Cholesky-based SPD solver.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Relative pivot threshold below which a Cholesky factorization is declared
/// singular: a pivot must exceed `1e-12 * trace(a) / d`.
pub const SPD_PIVOT_REL_TOL: f64 = 1e-12;

/// Unbiased sample covariance (N - 1 denominator) of the rows of `z`.
///
/// The output is symmetric to the bit: each off-diagonal entry is computed
/// once and mirrored.
pub fn sample_covariance(z: &Matrix) -> Result<Matrix> {
    let (n, d) = (z.rows(), z.cols());
    if n < 2 {
        return Err(Error::InvalidArgument {
            message: format!("sample covariance requires at least 2 rows, got {n}"),
        });
    }
    let mut means = vec![0.0; d];
    for row in z.iter_rows() {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let mut cov = Matrix::zeros(d, d);
    for j in 0..d {
        for k in j..d {
            let mut s = 0.0;
            for row in z.iter_rows() {
                s += (row[j] - means[j]) * (row[k] - means[k]);
            }
            let c = s / (n - 1) as f64;
            cov[(j, k)] = c;
            cov[(k, j)] = c;
        }
    }
    Ok(cov)
}

/// Solves `a x = b` for symmetric positive-definite `a` via Cholesky
/// factorization, without forming an inverse.
///
/// A pivot at or below the relative threshold aborts with a singular-matrix
/// error carrying the offending column and pivot value.
pub fn spd_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let d = a.rows();
    if a.cols() != d {
        return Err(Error::DimensionMismatch {
            left: d,
            right: a.cols(),
            context: "spd_solve requires a square matrix",
        });
    }
    if b.len() != d {
        return Err(Error::DimensionMismatch {
            left: d,
            right: b.len(),
            context: "spd_solve right-hand side",
        });
    }
    if d == 0 {
        return Err(Error::EmptyInput {
            context: "spd_solve on an empty matrix",
        });
    }
    let trace: f64 = (0..d).map(|i| a[(i, i)]).sum();
    let threshold = SPD_PIVOT_REL_TOL * trace / d as f64;

    // Lower-triangular factor, built column by column from the lower
    // triangle of `a`.
    let mut l = Matrix::zeros(d, d);
    for j in 0..d {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > threshold) {
            return Err(Error::SingularMatrix { column: j, pivot });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..d {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }

    // Forward substitution: L y = b.
    let mut y = vec![0.0; d];
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    // Back substitution: L^T x = y.
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let mut s = y[i];
        for k in (i + 1)..d {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    Ok(x)
}

/// Dominant eigenvector of a symmetric positive-semidefinite matrix with
/// nonzero trace, by power iteration.
///
/// The result has unit norm and a canonical sign: its largest-magnitude
/// component is positive (lowest index on ties). Iteration starts from the
/// axis with the largest diagonal entry and stops once the vector is stable
/// to 1e-13 in every component or after 200 rounds. When the two leading
/// eigenvalues coincide the returned vector is some unit vector of their
/// eigenspace; it is still a deterministic function of the input.
pub fn dominant_eigenvector(m: &Matrix) -> Result<Vec<f64>> {
    let d = m.rows();
    if m.cols() != d {
        return Err(Error::DimensionMismatch {
            left: d,
            right: m.cols(),
            context: "dominant_eigenvector requires a square matrix",
        });
    }
    if d == 0 {
        return Err(Error::EmptyInput {
            context: "dominant_eigenvector on an empty matrix",
        });
    }
    let start = (0..d)
        .max_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]).then(j.cmp(&i)))
        .unwrap();
    if !(m[(start, start)] > 0.0) {
        return Err(Error::InvalidArgument {
            message: "dominant_eigenvector requires a positive diagonal entry".into(),
        });
    }
    let mut q = vec![0.0; d];
    q[start] = 1.0;
    for _ in 0..200 {
        let mut next = vec![0.0; d];
        for (i, slot) in next.iter_mut().enumerate() {
            let mut s = 0.0;
            for (j, qj) in q.iter().enumerate() {
                s += m[(i, j)] * qj;
            }
            *slot = s;
        }
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        for v in &mut next {
            *v /= norm;
        }
        let converged = next
            .iter()
            .zip(&q)
            .all(|(a, b)| (a - b).abs() <= 1e-13);
        q = next;
        if converged {
            break;
        }
    }
    let lead = (0..d)
        .max_by(|&i, &j| q[i].abs().total_cmp(&q[j].abs()).then(j.cmp(&i)))
        .unwrap();
    if q[lead] < 0.0 {
        for v in &mut q {
            *v = -*v;
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn uniform(rng: &mut ChaCha8Rng) -> f64 {
        ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    #[test]
    fn covariance_of_identical_rows_is_zero() {
        let z = Matrix::from_rows(vec![vec![1.5, -2.0], vec![1.5, -2.0], vec![1.5, -2.0]]).unwrap();
        let c = sample_covariance(&z).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                assert_eq!(c[(j, k)], 0.0);
            }
        }
    }

    #[test]
    fn covariance_univariate_matches_variance() {
        // Values 1 and 3: variance (N-1 denominator) is 2.
        let z = Matrix::from_rows(vec![vec![1.0], vec![3.0]]).unwrap();
        let c = sample_covariance(&z).unwrap();
        assert_eq!(c[(0, 0)], 2.0);
    }

    #[test]
    fn covariance_is_bit_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rows = (0..12)
            .map(|_| (0..5).map(|_| uniform(&mut rng) * 4.0 - 2.0).collect())
            .collect();
        let c = sample_covariance(&Matrix::from_rows(rows).unwrap()).unwrap();
        for j in 0..5 {
            for k in 0..5 {
                assert!(c[(j, k)].to_bits() == c[(k, j)].to_bits());
            }
        }
    }

    #[test]
    fn covariance_needs_two_rows() {
        let z = Matrix::from_rows(vec![vec![1.0, 2.0]]).unwrap();
        assert!(sample_covariance(&z).is_err());
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let mut a = Matrix::zeros(3, 3);
        for i in 0..3 {
            a[(i, i)] = 1.0;
        }
        let x = spd_solve(&a, &[3.0, -1.0, 0.5]).unwrap();
        assert_eq!(x, vec![3.0, -1.0, 0.5]);
    }

    #[test]
    fn solve_diagonal() {
        // Perfect-square diagonal entries keep the Cholesky factor exact,
        // so the substitutions come out exact too.
        let mut a = Matrix::zeros(2, 2);
        a[(0, 0)] = 4.0;
        a[(1, 1)] = 16.0;
        let x = spd_solve(&a, &[2.0, 16.0]).unwrap();
        assert_eq!(x, vec![0.5, 1.0]);

        let mut a = Matrix::zeros(2, 2);
        a[(0, 0)] = 2.0;
        a[(1, 1)] = 8.0;
        let x = spd_solve(&a, &[2.0, 16.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert!((x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn solve_scales_with_matrix_magnitude() {
        // A tiny but well-conditioned matrix must not trip the relative
        // pivot threshold.
        let mut a = Matrix::zeros(3, 3);
        for i in 0..3 {
            a[(i, i)] = 1e-6;
        }
        let x = spd_solve(&a, &[1e-6, 2e-6, 3e-6]).unwrap();
        for (got, want) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn rank_deficient_matrix_is_singular() {
        // Outer product v v^T has rank 1; the second pivot must fail.
        let v = [1.0, 2.0, -1.5];
        let mut a = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                a[(i, j)] = v[i] * v[j];
            }
        }
        match spd_solve(&a, &[1.0, 1.0, 1.0]) {
            Err(Error::SingularMatrix { column, .. }) => assert_eq!(column, 1),
            other => panic!("expected singular matrix, got {other:?}"),
        }
    }

    #[test]
    fn zero_matrix_is_singular_at_first_column() {
        let a = Matrix::zeros(2, 2);
        match spd_solve(&a, &[1.0, 1.0]) {
            Err(Error::SingularMatrix { column, .. }) => assert_eq!(column, 0),
            other => panic!("expected singular matrix, got {other:?}"),
        }
    }

    #[test]
    fn solve_recovers_known_solution_on_random_spd_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for d in [1usize, 2, 5, 10, 20] {
            for _ in 0..20 {
                // Build A = L L^T from a random lower factor with diagonal
                // bounded away from zero, so A is SPD by construction.
                let mut l = Matrix::zeros(d, d);
                for i in 0..d {
                    for j in 0..i {
                        l[(i, j)] = uniform(&mut rng) * 2.0 - 1.0;
                    }
                    l[(i, i)] = 0.5 + 1.5 * uniform(&mut rng);
                }
                let mut a = Matrix::zeros(d, d);
                for i in 0..d {
                    for j in 0..d {
                        let mut s = 0.0;
                        for k in 0..d {
                            s += l[(i, k)] * l[(j, k)];
                        }
                        a[(i, j)] = s;
                    }
                }
                let x_true: Vec<f64> = (0..d).map(|_| uniform(&mut rng) * 4.0 - 2.0).collect();
                let mut b = vec![0.0; d];
                for i in 0..d {
                    for j in 0..d {
                        b[i] += a[(i, j)] * x_true[j];
                    }
                }
                let x = spd_solve(&a, &b).unwrap();
                let scale: f64 = x_true.iter().map(|v| v.abs()).fold(1.0, f64::max);
                for (got, want) in x.iter().zip(&x_true) {
                    assert!(
                        (got - want).abs() <= 1e-8 * scale,
                        "d={d}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn eigenvector_of_diagonal_matrix_is_the_largest_axis() {
        let mut a = Matrix::zeros(3, 3);
        a[(0, 0)] = 1.0;
        a[(1, 1)] = 5.0;
        a[(2, 2)] = 2.0;
        let q = dominant_eigenvector(&a).unwrap();
        assert_eq!(q, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn eigenvector_recovers_rank_one_direction() {
        // v v^T has the single eigenvector v (up to sign); the canonical
        // sign makes the largest-magnitude component positive.
        let v = [-0.6, 0.0, 0.8];
        let mut a = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                a[(i, j)] = v[i] * v[j];
            }
        }
        let q = dominant_eigenvector(&a).unwrap();
        // v's largest-magnitude component 0.8 is already positive, so v
        // itself is the canonical form.
        assert!((q[0] + 0.6).abs() < 1e-12);
        assert!(q[1].abs() < 1e-12);
        assert!((q[2] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn eigenvector_known_two_by_two() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1 with dominant direction
        // (1,1)/sqrt(2).
        let mut a = Matrix::zeros(2, 2);
        a[(0, 0)] = 2.0;
        a[(0, 1)] = 1.0;
        a[(1, 0)] = 1.0;
        a[(1, 1)] = 2.0;
        let q = dominant_eigenvector(&a).unwrap();
        let e = std::f64::consts::FRAC_1_SQRT_2;
        assert!((q[0] - e).abs() < 1e-12);
        assert!((q[1] - e).abs() < 1e-12);
    }

    #[test]
    fn eigenvector_on_random_spd_matrices_satisfies_the_eigen_relation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in [2usize, 5, 12] {
            for _ in 0..20 {
                // Sum of a few random outer products plus a dominant spike:
                // the spike weight of three traces caps the eigenvalue ratio
                // at 1/3, so 200 power iterations resolve the direction to
                // well below the asserted residual.
                let mut a = Matrix::zeros(d, d);
                for _ in 0..(d + 3) {
                    let v: Vec<f64> = (0..d).map(|_| uniform(&mut rng) * 2.0 - 1.0).collect();
                    for i in 0..d {
                        for j in 0..d {
                            a[(i, j)] += v[i] * v[j];
                        }
                    }
                }
                let trace: f64 = (0..d).map(|i| a[(i, i)]).sum();
                let u: Vec<f64> = (0..d).map(|_| uniform(&mut rng) * 2.0 - 1.0).collect();
                let u_norm: f64 = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                for i in 0..d {
                    for j in 0..d {
                        a[(i, j)] += 3.0 * trace * (u[i] / u_norm) * (u[j] / u_norm);
                    }
                }
                let q = dominant_eigenvector(&a).unwrap();
                let norm: f64 = q.iter().map(|v| v * v).sum::<f64>();
                assert!((norm - 1.0).abs() < 1e-12);
                // A q must be parallel to q with a nonnegative factor.
                let mut aq = vec![0.0; d];
                for i in 0..d {
                    for j in 0..d {
                        aq[i] += a[(i, j)] * q[j];
                    }
                }
                let lambda: f64 = aq.iter().zip(&q).map(|(x, y)| x * y).sum();
                assert!(lambda > 0.0);
                for i in 0..d {
                    assert!(
                        (aq[i] - lambda * q[i]).abs() <= 1e-9 * lambda,
                        "d={d}, component {i}: {} vs {}",
                        aq[i],
                        lambda * q[i]
                    );
                }
            }
        }
    }

    #[test]
    fn eigenvector_rejects_bad_inputs() {
        assert!(dominant_eigenvector(&Matrix::zeros(2, 3)).is_err());
        assert!(dominant_eigenvector(&Matrix::zeros(3, 3)).is_err());
    }
}
