//! Random-projection baseline. Where the generator method compresses the
//! token dimension (b rows down to k generators), the sketch compresses the
//! hidden dimension: it stores X̃ = A·P for a Gaussian P of shape n×k and
//! recovers AᵀB ≈ P·(X̃ᵀB). Entries of P carry variance 1/k, which makes
//! E[P·Pᵀ] = I and the product estimate unbiased.

use pamm_core::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::errors::{CliError, CliResult};

/// n×k projection with i.i.d. N(0, 1/k) entries.
pub fn sketch_matrix(n: usize, k: usize, seed: u64) -> DenseMatrix<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (k as f64).sqrt();
    DenseMatrix::from_fn(n, k, |_, _| (rng.sample::<f64, _>(StandardNormal) * scale) as f32)
}

/// Orthonormalizes the columns of `p` in 64-bit (modified Gram-Schmidt with
/// one re-pass). At k = n the result satisfies P·Pᵀ = I up to rounding, so
/// the square sketch becomes lossless; used only as a sanity mode.
fn orthonormalize_columns(p: &DenseMatrix<f32>) -> CliResult<DenseMatrix<f32>> {
    let n = p.rows();
    let k = p.cols();
    let mut cols: Vec<Vec<f64>> = (0..k)
        .map(|j| (0..n).map(|i| p.at(i, j) as f64).collect())
        .collect();
    for j in 0..k {
        for _pass in 0..2 {
            for prev in 0..j {
                let dot: f64 = (0..n).map(|i| cols[j][i] * cols[prev][i]).sum();
                for i in 0..n {
                    cols[j][i] -= dot * cols[prev][i];
                }
            }
        }
        let norm: f64 = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-10 {
            return Err(CliError::usage("sketch columns are linearly dependent"));
        }
        for v in &mut cols[j] {
            *v /= norm;
        }
    }
    Ok(DenseMatrix::from_fn(n, k, |i, j| cols[j][i] as f32))
}

/// Stores X̃ = A·P (b×k scalars) and returns the n×m estimate P·(X̃ᵀB)
/// together with the stored-scalar count b·k. `orthogonalize` replaces the
/// Gaussian P with its column-orthonormalization; meaningful at k = n where
/// it makes the sketch exact.
pub fn gaussian_sketch_baseline(
    a: &DenseMatrix<f32>,
    b_mat: &DenseMatrix<f32>,
    k: usize,
    seed: u64,
    orthogonalize: bool,
) -> CliResult<(DenseMatrix<f32>, usize)> {
    let (b, n) = a.shape();
    if b_mat.rows() != b {
        return Err(CliError::Core(pamm_core::Error::Shape {
            context: "sketch companion rows",
            expected: (b, b_mat.cols()),
            got: b_mat.shape(),
        }));
    }
    if k == 0 || k > n {
        return Err(CliError::usage(format!(
            "sketch width must lie in 1..={n} (it compresses the hidden dimension), got {k}"
        )));
    }
    let mut p = sketch_matrix(n, k, seed);
    if orthogonalize {
        p = orthonormalize_columns(&p)?;
    }
    let stored = a.mul(&p)?;
    let inner = stored.tr_mul(b_mat)?;
    let estimate = p.mul(&inner)?;
    Ok((estimate, b * k))
}
