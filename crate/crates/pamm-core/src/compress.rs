use alloc::vec;
use alloc::vec::Vec;

use crate::accounting;
use crate::config::PammConfig;
use crate::error::{Error, Result};
use crate::matrix::{cosine_similarity_matrix, DenseMatrix};
use crate::sample::SeededSampler;
use crate::scalar::Scalar;

/// Compressed form of a `b x n` matrix: `k` generator rows, a per-row
/// assignment into them, the projection coefficient of each row onto its
/// generator's line, and the drop-correction scalar.
///
/// Invariants after construction:
/// - every dropped row has `alpha == 0` (kept rows may also carry 0 when
///   they are zero rows or exactly orthogonal to all generators);
/// - `beta == b / (b - eta)` while `eta < b`, `None` once everything was
///   dropped (the approximate product is then the zero matrix);
/// - stored payload is `k·n + 2b` scalars, see [`accounting::memory_footprint`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedActivation<T: Scalar> {
    pub generators: DenseMatrix<T>,
    /// Length `b`, entries in `[0, k)`.
    pub assignments: Vec<u32>,
    /// Length `b`; signed projection coefficients, 0 for dropped rows.
    pub alpha: Vec<T>,
    pub beta: Option<T>,
    pub b: usize,
    pub n: usize,
    pub k: usize,
    /// Number of rows dropped by the residual condition.
    pub eta: usize,
    /// Residual tolerance the compression was built with; `INFINITY` when
    /// the drop condition was disabled.
    pub epsilon: f64,
    /// Sampling seed; 0 when the generators were supplied explicitly.
    pub seed: u64,
}

impl<T: Scalar> CompressedActivation<T> {
    /// Replace the drop correction by 1. The product-error bound is stated
    /// for the uncorrected estimate, so bound checks run on this variant.
    pub fn with_unit_beta(mut self) -> Self {
        self.beta = Some(T::one());
        self
    }

    /// `(compressed_scalars, dense_scalars, dense/compressed)`.
    pub fn memory_footprint(&self) -> (usize, usize, f64) {
        accounting::memory_footprint(self.b, self.n, self.k)
    }

    pub fn coverage(&self) -> f64 {
        (self.b - self.eta) as f64 / self.b as f64
    }
}

/// Assign every row of `a` to the generator with the largest absolute cosine
/// similarity (ties to the smallest index) and compute the signed projection
/// coefficient `⟨A_i, C_f(i)⟩ / ‖C_f(i)‖²` onto that generator's line.
///
/// Maximizing |cosine| is the same as minimizing the distance between the
/// row and its projection, and the signed coefficient makes antiparallel
/// generators represent a row exactly.
///
/// Rows with norm at most `norm_guard` get `(f, alpha) = (0, 0)`: the zero
/// vector is their exact representative. Generators below the guard are
/// excluded from the argmax; if no generator is usable a row also gets
/// `(0, 0)` and is left for the residual condition to judge.
pub fn assign_and_project<T: Scalar>(
    a: &DenseMatrix<T>,
    c: &DenseMatrix<T>,
    norm_guard: T,
) -> Result<(Vec<u32>, Vec<T>)> {
    if a.cols() != c.cols() {
        return Err(Error::Shape {
            context: "assign_and_project",
            expected: (c.rows(), a.cols()),
            got: c.shape(),
        });
    }
    if c.rows() > u32::MAX as usize {
        return Err(Error::Argument("generator count exceeds u32 range".into()));
    }
    let sim = cosine_similarity_matrix(a, c, norm_guard)?;
    let a_norms = a.row_norms();
    let c_norms = c.row_norms();
    // Squared norms accumulated in the same order as the dot products below,
    // so a row that IS its generator gets alpha == 1 bit-exactly and a zero
    // residual. The strict-tolerance paths depend on that.
    let c_norms_sq: Vec<T> = (0..c.rows())
        .map(|j| {
            let mut acc = T::zero();
            for &v in c.row(j) {
                acc += v * v;
            }
            acc
        })
        .collect();

    let b = a.rows();
    let k = c.rows();
    let mut f = vec![0u32; b];
    let mut alpha = vec![T::zero(); b];
    for i in 0..b {
        if a_norms[i] <= norm_guard {
            continue;
        }
        let mut best: Option<(usize, T)> = None;
        for j in 0..k {
            if c_norms[j] <= norm_guard {
                continue;
            }
            let score = sim.at(i, j).abs();
            match best {
                Some((_, s)) if score <= s => {}
                _ => best = Some((j, score)),
            }
        }
        if let Some((j, _)) = best {
            f[i] = j as u32;
            let arow = a.row(i);
            let crow = c.row(j);
            let mut dot = T::zero();
            for t in 0..a.cols() {
                dot += arow[t] * crow[t];
            }
            alpha[i] = dot / c_norms_sq[j];
        }
    }
    Ok((f, alpha))
}

/// Zero out the coefficient of every row whose projection residual exceeds
/// `epsilon` relative to the row's own norm, and count the drops.
///
/// Zero rows (norm at or below `norm_guard`) are never dropped: their
/// representative is exact. `epsilon = INFINITY` keeps everything.
pub fn apply_neighborhood_condition<T: Scalar>(
    a: &DenseMatrix<T>,
    c: &DenseMatrix<T>,
    f: &[u32],
    alpha: &[T],
    epsilon: f64,
    norm_guard: T,
) -> Result<(Vec<T>, usize)> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::Argument(alloc::format!(
            "epsilon must be non-negative, got {epsilon}"
        )));
    }
    if f.len() != a.rows() || alpha.len() != a.rows() {
        return Err(Error::Argument("assignment length does not match row count".into()));
    }
    let mut kept = alpha.to_vec();
    if epsilon.is_infinite() {
        return Ok((kept, 0));
    }
    let eps = T::from_f64(epsilon);
    let a_norms = a.row_norms();
    let mut eta = 0usize;
    for i in 0..a.rows() {
        if a_norms[i] <= norm_guard {
            continue;
        }
        let crow = c.row(f[i] as usize);
        let arow = a.row(i);
        let mut res_sq = T::zero();
        for t in 0..a.cols() {
            let d = arow[t] - alpha[i] * crow[t];
            res_sq += d * d;
        }
        if res_sq.sqrt() > eps * a_norms[i] {
            kept[i] = T::zero();
            eta += 1;
        }
    }
    Ok((kept, eta))
}

/// Drop-correction scalar `b / (b - eta)`; `None` once every row was
/// dropped. Under the model where each row survives independently with
/// probability `(b - eta) / b`, this scaling makes the surviving sum an
/// unbiased estimate of the full one.
pub fn compute_beta(b: usize, eta: usize) -> Result<Option<f64>> {
    if eta > b {
        return Err(Error::Argument(alloc::format!("eta {eta} exceeds row count {b}")));
    }
    if eta == b {
        return Ok(None);
    }
    Ok(Some(b as f64 / (b - eta) as f64))
}

/// Compress `a` with an explicitly chosen generator row set. This is the
/// deterministic entry point used by tests and analysis code; [`compress`]
/// is the sampling front end. The `seed` field of the result is 0.
pub fn compress_with_generators<T: Scalar>(
    a: &DenseMatrix<T>,
    generator_indices: &[usize],
    epsilon: f64,
    norm_guard: f64,
) -> Result<CompressedActivation<T>> {
    let b = a.rows();
    let n = a.cols();
    let k = generator_indices.len();
    if k == 0 {
        return Err(Error::Argument("generator index list is empty".into()));
    }
    let mut seen = vec![false; b];
    for &idx in generator_indices {
        if idx >= b {
            return Err(Error::Argument(alloc::format!(
                "generator index {idx} out of range for {b} rows"
            )));
        }
        if seen[idx] {
            return Err(Error::Argument(alloc::format!("duplicate generator index {idx}")));
        }
        seen[idx] = true;
    }

    let mut generators = DenseMatrix::zeros(k, n);
    for (slot, &idx) in generator_indices.iter().enumerate() {
        generators.row_mut(slot).copy_from_slice(a.row(idx));
    }

    let guard = T::from_f64(norm_guard);
    let (f, alpha0) = assign_and_project(a, &generators, guard)?;
    let (alpha, eta) = apply_neighborhood_condition(a, &generators, &f, &alpha0, epsilon, guard)?;
    let beta = compute_beta(b, eta)?.map(T::from_f64);

    Ok(CompressedActivation {
        generators,
        assignments: f,
        alpha,
        beta,
        b,
        n,
        k,
        eta,
        epsilon,
        seed: 0,
    })
}

/// Compress `a` by sampling `k` generator rows uniformly without
/// replacement, assigning, projecting, applying the residual condition and
/// computing the drop correction.
pub fn compress<T: Scalar>(a: &DenseMatrix<T>, cfg: &PammConfig) -> Result<CompressedActivation<T>> {
    let b = a.rows();
    let k = cfg.effective_k(b)?;
    let sampler = SeededSampler::new(cfg.seed);
    let mut indices = sampler.sample_without_replacement(b, k)?;
    // Generators are stored in increasing row order; the smallest-index
    // tie-break then prefers earlier rows of the input.
    indices.sort_unstable();
    let mut comp = compress_with_generators(a, &indices, cfg.epsilon, cfg.norm_guard)?;
    comp.seed = cfg.seed;
    Ok(comp)
}
