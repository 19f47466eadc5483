//! Scaled dot-product attention for one sequence, forward and backward.
//!
//! Operates on the already-projected `Q`, `K`, `V` of a single sequence
//! (`L×d` each); the model slices its flattened batch into sequences before
//! calling in. The score matrix is materialized, which is fine at toy scale.

use crate::error::{Error, Result};
use crate::layers::loss::row_softmax;
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

fn check_shapes<T: Scalar>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
) -> Result<()> {
    if k.shape() != q.shape() || v.shape() != q.shape() {
        return Err(Error::Shape {
            context: "attention inputs",
            expected: q.shape(),
            got: if k.shape() != q.shape() { k.shape() } else { v.shape() },
        });
    }
    Ok(())
}

/// `out = softmax(Q·Kᵀ/√d)·V`; also returns the probability matrix, which the
/// backward pass needs.
pub fn attention_forward<T: Scalar>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
) -> Result<(DenseMatrix<T>, DenseMatrix<T>)> {
    check_shapes(q, k, v)?;
    let scale = T::one() / T::from_f64(num_traits::Float::sqrt(q.cols() as f64));
    let mut scores = q.mul_tr(k)?;
    scores.scale_in_place(scale);
    let probs = row_softmax(&scores);
    let out = probs.mul(v)?;
    Ok((out, probs))
}

/// Gradients of the attention output with respect to `Q`, `K`, `V`, given the
/// probabilities saved by the forward pass.
pub fn attention_backward<T: Scalar>(
    q: &DenseMatrix<T>,
    k: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    probs: &DenseMatrix<T>,
    grad_out: &DenseMatrix<T>,
) -> Result<(DenseMatrix<T>, DenseMatrix<T>, DenseMatrix<T>)> {
    check_shapes(q, k, v)?;
    if grad_out.shape() != q.shape() {
        return Err(Error::Shape {
            context: "attention output gradient",
            expected: q.shape(),
            got: grad_out.shape(),
        });
    }

    let grad_v = probs.tr_mul(grad_out)?;
    let grad_probs = grad_out.mul_tr(v)?;

    // Softmax backward per row: dS = P ⊙ (dP − Σ_j dP_j·P_j).
    let mut grad_scores = DenseMatrix::zeros(probs.rows(), probs.cols());
    for i in 0..probs.rows() {
        let p = probs.row(i);
        let dp = grad_probs.row(i);
        let dot: T = p.iter().zip(dp.iter()).map(|(&a, &b)| a * b).sum();
        let out_row = grad_scores.row_mut(i);
        for j in 0..p.len() {
            out_row[j] = p[j] * (dp[j] - dot);
        }
    }
    let scale = T::one() / T::from_f64(num_traits::Float::sqrt(q.cols() as f64));
    grad_scores.scale_in_place(scale);

    let grad_q = grad_scores.mul(k)?;
    let grad_k = grad_scores.tr_mul(q)?;
    Ok((grad_q, grad_k, grad_v))
}
