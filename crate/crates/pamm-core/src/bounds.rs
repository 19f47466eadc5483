use alloc::vec::Vec;

use num_traits::Float;

use crate::compress::CompressedActivation;
use crate::config::DEFAULT_NORM_GUARD;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;
use crate::spectral::spectral_norm;

/// Right-hand side of the product-error bound for the uncorrected estimate:
///
///   ‖O − Õ‖_F²  ≤  ‖B‖₂² · (ε² ‖A_kept‖_F² + ‖A_dropped‖_F²)
///
/// Kept rows err by at most ε relative each, dropped rows are missing
/// entirely, and the operator norm of B turns row-space error into product
/// error. The estimate must be built with the drop correction forced to 1
/// (see [`CompressedActivation::with_unit_beta`]); the inequality is not
/// stated for the corrected product. Requires a finite ε: without a residual
/// tolerance the right side is vacuous.
///
/// The kept/dropped split is recovered from the stored coefficients: a row
/// was dropped exactly when its coefficient is zero, its norm is above the
/// guard and ε < 1 (a zeroed row's residual is its whole norm, so with
/// ε ≥ 1 it would have been kept). The recovered count is cross-checked
/// against the stored `eta`.
pub fn error_bound_rhs<T: Scalar>(
    a: &DenseMatrix<T>,
    comp: &CompressedActivation<T>,
    b_mat: &DenseMatrix<T>,
) -> Result<f64> {
    if !comp.epsilon.is_finite() {
        return Err(Error::Argument(
            "the error bound needs a finite epsilon; an untolerated compression has no bound".into(),
        ));
    }
    if a.rows() != comp.b || a.cols() != comp.n {
        return Err(Error::Shape {
            context: "error_bound_rhs (matrix vs compression)",
            expected: (comp.b, comp.n),
            got: a.shape(),
        });
    }
    if b_mat.rows() != comp.b {
        return Err(Error::Shape {
            context: "error_bound_rhs (companion rows)",
            expected: (comp.b, b_mat.cols()),
            got: b_mat.shape(),
        });
    }

    let guard = T::from_f64(DEFAULT_NORM_GUARD);
    let a_norms = a.row_norms();
    let mut kept_sq = 0.0f64;
    let mut dropped_sq = 0.0f64;
    let mut recovered_eta = 0usize;
    for i in 0..comp.b {
        let norm = a_norms[i].to_f64();
        let dropped =
            comp.alpha[i] == T::zero() && a_norms[i] > guard && comp.epsilon < 1.0;
        if dropped {
            recovered_eta += 1;
            dropped_sq += norm * norm;
        } else {
            kept_sq += norm * norm;
        }
    }
    if recovered_eta != comp.eta {
        return Err(Error::Argument(
            "compressed form is inconsistent with the supplied matrix".into(),
        ));
    }

    let b64 = b_mat.cast::<f64>();
    let (snorm, _) = spectral_norm(&b64, 20_000, 1e-14)?;
    Ok(snorm * snorm * (comp.epsilon * comp.epsilon * kept_sq + dropped_sq))
}

/// Brute-force neighborhood census. For every row `i`, count the rows `j`
/// whose line can represent `A_i` within tolerance: with the projection
/// `h(x, y) = (⟨x, y⟩ / ‖y‖²) · y`, row `j` qualifies when
/// `‖A_i − h(A_i, A_j)‖ ≤ ε ‖A_i‖`. Returns all counts and their minimum.
///
/// Zero rows (norm at most the guard) are excluded as candidates: they span
/// no line. A zero row itself is represented exactly by anything, so its
/// neighborhood is all `b` rows. Internals run at 64-bit; the census is
/// analysis tooling, not part of the compression path.
pub fn epsilon_neighborhood_sizes<T: Scalar>(
    a: &DenseMatrix<T>,
    epsilon: f64,
) -> Result<(Vec<usize>, usize)> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::Argument(alloc::format!(
            "epsilon must be non-negative, got {epsilon}"
        )));
    }
    let b = a.rows();
    let a64 = a.cast::<f64>();
    let norms = a64.row_norms();
    let eps_sq = epsilon * epsilon;

    let mut sizes = Vec::with_capacity(b);
    for i in 0..b {
        if norms[i] <= DEFAULT_NORM_GUARD {
            sizes.push(b);
            continue;
        }
        let arow = a64.row(i);
        let lhs_budget = eps_sq * norms[i] * norms[i];
        let mut count = 0usize;
        for j in 0..b {
            if norms[j] <= DEFAULT_NORM_GUARD {
                continue;
            }
            let crow = a64.row(j);
            let mut dot = 0.0f64;
            for t in 0..a.cols() {
                dot += arow[t] * crow[t];
            }
            // ‖A_i − h‖² = ‖A_i‖² − ⟨A_i, A_j⟩² / ‖A_j‖² by orthogonality
            // of the projection residual.
            let res_sq = (norms[i] * norms[i] - dot * dot / (norms[j] * norms[j])).max(0.0);
            if res_sq <= lhs_budget {
                count += 1;
            }
        }
        sizes.push(count);
    }
    let n_min = sizes.iter().copied().min().unwrap_or(0);
    Ok((sizes, n_min))
}

/// Smallest generator count that guarantees full coverage with probability
/// above `1 − delta` for data whose smallest neighborhood has `n_min` rows:
/// the least integer strictly greater than `(b / n_min) · ln(b / delta)`.
pub fn k_bound(b: usize, n_min: usize, delta: f64) -> Result<usize> {
    if n_min == 0 {
        return Err(Error::Argument("n_min must be at least 1".into()));
    }
    if b == 0 {
        return Err(Error::Argument("row count must be at least 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Argument(alloc::format!("delta must lie in (0, 1), got {delta}")));
    }
    let x = (b as f64 / n_min as f64) * Float::ln(b as f64 / delta);
    if !x.is_finite() {
        return Err(Error::Numeric(alloc::format!("k bound overflowed for b={b}, delta={delta}")));
    }
    Ok(Float::floor(x) as usize + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compress::compress_with_generators;
    use crate::sample::splitmix64;

    fn rng_stream(mut seed: u64) -> impl FnMut() -> f64 {
        move || {
            seed = splitmix64(seed);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        }
    }

    #[test]
    fn bound_is_nonnegative_and_holds_for_exact_representation() {
        let a = DenseMatrix::from_vec(2, 2, vec![1.0f32, 0.0, 2.0, 0.0]).unwrap();
        let comp = compress_with_generators(&a, &[0], 0.25, 1e-12).unwrap().with_unit_beta();
        assert_eq!(comp.eta, 0);
        let b = DenseMatrix::from_vec(2, 2, vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        let rhs = error_bound_rhs(&a, &comp, &b).unwrap();
        let exact = a.tr_mul(&b).unwrap();
        let approx = crate::approx::approx_matmul(&comp, &b).unwrap();
        let lhs = exact.sub(&approx).unwrap().frobenius_norm_f64().powi(2);
        assert!(lhs <= rhs * (1.0 + 1e-4) + 1e-12, "lhs {lhs} rhs {rhs}");
        assert!(lhs < 1e-10, "collinear rows represent exactly");
    }

    #[test]
    fn total_drop_bound_reduces_to_submultiplicativity() {
        // Orthogonal pair with a zero generator direction: everything above
        // the guard is dropped, the bound becomes ‖B‖₂²·‖A‖_F².
        let a = DenseMatrix::from_vec(2, 2, vec![0.0f32, 1.0, 1.0, 0.0]).unwrap();
        let mut comp = compress_with_generators(&a, &[0], 0.5, 1e-12).unwrap().with_unit_beta();
        comp.alpha = alloc::vec![0.0, 0.0];
        comp.eta = 2;
        let b = DenseMatrix::from_vec(2, 3, vec![1.0f32, 0.0, 2.0, 0.0, 1.0, 1.0]).unwrap();
        let rhs = error_bound_rhs(&a, &comp, &b).unwrap();
        let exact = a.tr_mul(&b).unwrap();
        let lhs = exact.frobenius_norm_f64().powi(2);
        assert!(lhs <= rhs * (1.0 + 1e-4), "lhs {lhs} rhs {rhs}");
        let (snorm, _) = spectral_norm(&b.cast::<f64>(), 10_000, 1e-14).unwrap();
        let expect = snorm * snorm * a.frobenius_norm_f64().powi(2);
        assert!((rhs - expect).abs() / expect < 1e-10);
    }

    #[test]
    fn infinite_epsilon_is_rejected() {
        let a = DenseMatrix::from_vec(2, 2, vec![1.0f32, 0.0, 0.0, 1.0]).unwrap();
        let comp = compress_with_generators(&a, &[0], f64::INFINITY, 1e-12).unwrap();
        let b = DenseMatrix::<f32>::identity(2);
        assert!(matches!(error_bound_rhs(&a, &comp, &b), Err(Error::Argument(_))));
    }

    #[test]
    fn monte_carlo_bound_audit_small() {
        // Random instances, unit-beta estimates, finite tolerances; the
        // squared product error never exceeds the bound. The full-size audit
        // lives in the acceptance suite; this is the fast regression copy.
        let mut next = rng_stream(0xB0B);
        let mut checked = 0usize;
        for case in 0..60 {
            let b_rows = 4 + (case * 7) % 29;
            let n = 2 + case % 6;
            let m = 1 + case % 4;
            let k = 1 + case % b_rows.min(6);
            let eps = [0.0, 0.1, 0.5, 0.9, 1.5][case % 5];
            let a = DenseMatrix::<f32>::from_fn(b_rows, n, |_, _| next() as f32);
            let bm = DenseMatrix::<f32>::from_fn(b_rows, m, |_, _| next() as f32);
            let cfg = crate::config::PammConfig::with_count(k, case as u64).epsilon(eps);
            let comp = crate::compress::compress(&a, &cfg).unwrap().with_unit_beta();
            let rhs = error_bound_rhs(&a, &comp, &bm).unwrap();
            let exact = a.tr_mul(&bm).unwrap();
            let approx = crate::approx::approx_matmul(&comp, &bm).unwrap();
            let lhs = exact.sub(&approx).unwrap().frobenius_norm_f64().powi(2);
            assert!(
                lhs <= rhs * (1.0 + 1e-4) + 1e-12,
                "case {case}: lhs {lhs} exceeds rhs {rhs}"
            );
            checked += 1;
        }
        assert_eq!(checked, 60);
    }

    #[test]
    fn neighborhood_of_collinear_rows_is_everything() {
        let a = DenseMatrix::from_fn(5, 3, |i, j| ((i + 1) as f32) * [1.0f32, 2.0, -0.5][j]);
        let (sizes, n_min) = epsilon_neighborhood_sizes(&a, 0.0).unwrap();
        assert!(sizes.iter().all(|&s| s == 5));
        assert_eq!(n_min, 5);
    }

    #[test]
    fn orthogonal_rows_only_cover_themselves() {
        let a = DenseMatrix::<f32>::identity(4);
        let (sizes, n_min) = epsilon_neighborhood_sizes(&a, 0.99).unwrap();
        assert!(sizes.iter().all(|&s| s == 1));
        assert_eq!(n_min, 1);
        // At eps >= 1 every projection (even the zero one) is close enough.
        let (_, n_min_loose) = epsilon_neighborhood_sizes(&a, 1.0).unwrap();
        assert_eq!(n_min_loose, 4);
    }

    #[test]
    fn census_matches_independent_double_loop() {
        let mut next = rng_stream(0xCE);
        let a = DenseMatrix::<f32>::from_fn(32, 4, |_, _| next() as f32);
        let eps = 0.3;
        let (sizes, n_min) = epsilon_neighborhood_sizes(&a, eps).unwrap();

        // Second implementation: explicit residual vector, no Pythagoras.
        let a64 = a.cast::<f64>();
        for i in 0..32 {
            let mut count = 0usize;
            let ni = a64.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            for j in 0..32 {
                let nj = a64.row(j).iter().map(|v| v * v).sum::<f64>().sqrt();
                if nj <= 1e-12 {
                    continue;
                }
                let dot: f64 = a64.row(i).iter().zip(a64.row(j)).map(|(x, y)| x * y).sum();
                let coef = dot / (nj * nj);
                let res: f64 = a64
                    .row(i)
                    .iter()
                    .zip(a64.row(j))
                    .map(|(x, y)| (x - coef * y) * (x - coef * y))
                    .sum::<f64>()
                    .sqrt();
                if res <= eps * ni {
                    count += 1;
                }
            }
            assert_eq!(sizes[i], count, "row {i}");
        }
        assert_eq!(n_min, *sizes.iter().min().unwrap());
    }

    #[test]
    fn zero_rows_belong_to_every_neighborhood_of_themselves() {
        let a = DenseMatrix::from_vec(3, 2, vec![0.0f32, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        let (sizes, _) = epsilon_neighborhood_sizes(&a, 0.5).unwrap();
        assert_eq!(sizes[0], 3, "a zero row is represented exactly by anything");
        // Nonzero rows cannot use the zero row as a candidate.
        assert_eq!(sizes[1], 1);
        assert_eq!(sizes[2], 1);
    }

    #[test]
    fn k_bound_hand_values() {
        assert_eq!(k_bound(1000, 100, 0.01).unwrap(), 116);
        assert_eq!(k_bound(2, 2, 0.5).unwrap(), 2);
        assert!(k_bound(10, 0, 0.1).is_err());
        assert!(k_bound(10, 5, 0.0).is_err());
        assert!(k_bound(10, 5, 1.0).is_err());
    }

    #[test]
    fn k_bound_satisfies_its_defining_inequality() {
        for &(b, n_min, delta) in
            &[(1000usize, 100usize, 0.01f64), (64, 3, 0.2), (17, 17, 0.9), (4096, 33, 0.001)]
        {
            let k = k_bound(b, n_min, delta).unwrap();
            let fail = b as f64 * (-(k as f64) * n_min as f64 / b as f64).exp();
            assert!(fail < delta, "b={b} n_min={n_min} delta={delta}: {fail}");
            // Minimality: one less generator no longer clears the bound.
            if k > 1 {
                let x = (b as f64 / n_min as f64) * (b as f64 / delta).ln();
                assert!(((k - 1) as f64) <= x, "k={k} is not the least integer above {x}");
            }
        }
    }
}
