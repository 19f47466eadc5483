//! Softmax cross-entropy over logit rows.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

/// Row-wise softmax, shifted by the row max so large logits cannot overflow.
pub fn row_softmax<T: Scalar>(logits: &DenseMatrix<T>) -> DenseMatrix<T> {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let mut max = row[0];
        for &v in row.iter() {
            if v > max {
                max = v;
            }
        }
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Mean cross-entropy of `logits` against integer `targets`, with the
/// gradient of that mean: `(softmax − onehot) / rows`. The scalar loss is
/// accumulated in f64 regardless of the working precision.
pub fn cross_entropy<T: Scalar>(
    logits: &DenseMatrix<T>,
    targets: &[usize],
) -> Result<(f64, DenseMatrix<T>)> {
    if targets.len() != logits.rows() {
        return Err(Error::Argument(alloc::format!(
            "expected one target per logit row, got {} targets for {} rows",
            targets.len(),
            logits.rows()
        )));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= logits.cols()) {
        return Err(Error::Argument(alloc::format!(
            "target class {t} out of range for {} classes",
            logits.cols()
        )));
    }

    let b = logits.rows();
    let mut grad = row_softmax(logits);
    let mut loss = 0.0f64;
    for (i, &t) in targets.iter().enumerate() {
        // -ln p_t through the f64 path; the T-precision softmax probability is
        // what the gradient uses, so grad and loss stay consistent.
        let p: f64 = grad.at(i, t).to_f64();
        // `max` drops a NaN operand. p is NaN exactly when the logits were
        // non-finite, and that must reach the caller as a non-finite loss,
        // not get clamped into -ln(MIN_POSITIVE).
        if p.is_nan() {
            loss = f64::NAN;
        }
        loss -= num_traits::Float::ln(p.max(f64::MIN_POSITIVE));
        let v = grad.at(i, t);
        grad.set(i, t, v - T::one());
    }
    let inv_b = T::from_f64(1.0 / b as f64);
    grad.scale_in_place(inv_b);
    Ok((loss / b as f64, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    /// One-sample probabilities as a convenience.
    fn softmax_vec(v: &[f64]) -> Vec<f64> {
        let logits = DenseMatrix::from_vec(1, v.len(), v.to_vec()).unwrap();
        row_softmax(&logits).data().to_vec()
    }

    #[test]
    fn softmax_rows_are_distributions() {
        let logits =
            DenseMatrix::from_vec(2, 3, vec![1.0f64, 2.0, 3.0, -50.0, 0.0, 50.0]).unwrap();
        let p = row_softmax(&logits);
        for i in 0..2 {
            let sum: f64 = p.row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(p.row(i).iter().all(|&v| v >= 0.0));
        }
        // Shift invariance: +100 on a row changes nothing.
        let shifted =
            DenseMatrix::from_vec(1, 3, vec![101.0f64, 102.0, 103.0]).unwrap();
        let q = row_softmax(&shifted);
        for j in 0..3 {
            assert!((q.at(0, j) - p.at(0, j)).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_logits_cost_log_vocab() {
        let vocab = 11;
        let logits = DenseMatrix::<f64>::zeros(4, vocab);
        let (loss, _) = cross_entropy(&logits, &[0, 3, 7, 10]).unwrap();
        assert!((loss - (vocab as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_prediction_costs_nearly_nothing() {
        let mut logits = DenseMatrix::<f64>::zeros(1, 5);
        logits.set(0, 2, 40.0);
        let (loss, _) = cross_entropy(&logits, &[2]).unwrap();
        assert!(loss < 1e-12);
    }

    #[test]
    fn gradient_rows_sum_to_zero() {
        let logits =
            DenseMatrix::from_vec(2, 4, vec![0.3f64, -1.0, 2.0, 0.7, 1.0, 1.0, 1.0, 1.0])
                .unwrap();
        let (_, grad) = cross_entropy(&logits, &[1, 2]).unwrap();
        for i in 0..2 {
            let sum: f64 = grad.row(i).iter().sum();
            assert!(sum.abs() < 1e-12, "row {i} sums to {sum}");
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let base = vec![0.4f64, -0.2, 1.3, 0.0, -0.9, 0.5];
        let targets = [2usize, 0];
        let logits = DenseMatrix::from_vec(2, 3, base.clone()).unwrap();
        let (_, grad) = cross_entropy(&logits, &targets).unwrap();

        let h = 1e-6;
        for idx in 0..base.len() {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[idx] += h;
            minus[idx] -= h;
            let (lp, _) =
                cross_entropy(&DenseMatrix::from_vec(2, 3, plus).unwrap(), &targets).unwrap();
            let (lm, _) =
                cross_entropy(&DenseMatrix::from_vec(2, 3, minus).unwrap(), &targets).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let g = grad.data()[idx];
            assert!((fd - g).abs() < 1e-8, "coordinate {idx}: fd {fd} vs grad {g}");
        }
    }

    #[test]
    fn softmax_helper_agrees_with_direct_formula() {
        let p = softmax_vec(&[0.0, 1.0]);
        let e = 1.0f64.exp();
        assert!((p[0] - 1.0 / (1.0 + e)).abs() < 1e-12);
        assert!((p[1] - e / (1.0 + e)).abs() < 1e-12);
    }

    #[test]
    fn non_finite_logits_poison_the_loss() {
        // An inf logit makes the shifted softmax produce NaN everywhere
        // (inf - inf); the loss must report that rather than bottom out at
        // the probability clamp.
        let logits =
            DenseMatrix::from_vec(1, 3, vec![f32::INFINITY, 0.0, -1.0]).unwrap();
        let (loss, _) = cross_entropy(&logits, &[1]).unwrap();
        assert!(loss.is_nan());

        let logits = DenseMatrix::from_vec(1, 2, vec![f64::NAN, 0.0]).unwrap();
        let (loss, _) = cross_entropy(&logits, &[1]).unwrap();
        assert!(loss.is_nan());
    }

    #[test]
    fn rejects_bad_targets() {
        let logits = DenseMatrix::<f32>::zeros(2, 3);
        assert!(cross_entropy(&logits, &[0]).is_err());
        assert!(cross_entropy(&logits, &[0, 3]).is_err());
    }
}
