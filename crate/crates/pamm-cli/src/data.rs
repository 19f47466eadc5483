//! Synthetic inputs for the experiment commands. Everything is seeded and
//! therefore reproducible; the working precision is f32 throughout.

use pamm_core::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::errors::{CliError, CliResult};

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample::<f32, _>(StandardNormal))
}

/// Rows fall into `clusters` groups of near-collinear vectors: row i belongs
/// to cluster i mod clusters (sizes differ by at most one), and equals a
/// random magnitude in [0.5, 1.5) times the cluster's unit center, plus a
/// Gaussian perturbation whose expected length is `spread` times the row's
/// magnitude. At spread 0 each cluster is a single line through the origin.
pub fn generate_clustered_data(
    b: usize,
    n: usize,
    clusters: usize,
    spread: f64,
    seed: u64,
) -> CliResult<DenseMatrix<f32>> {
    if b == 0 || n == 0 {
        return Err(CliError::usage("matrix dimensions must be positive"));
    }
    if clusters == 0 || clusters > b {
        return Err(CliError::usage(format!(
            "cluster count must lie in 1..={b}, got {clusters}"
        )));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(CliError::usage(format!("spread must be finite and non-negative, got {spread}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec<f32>> = Vec::with_capacity(clusters);
    while centers.len() < clusters {
        let raw: Vec<f32> = (0..n).map(|_| rng.sample::<f32, _>(StandardNormal)).collect();
        let norm = raw.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        centers.push(raw.iter().map(|&v| (v as f64 / norm) as f32).collect());
    }

    let noise_scale = spread / (n as f64).sqrt();
    let mut data = Vec::with_capacity(b * n);
    for i in 0..b {
        let center = &centers[i % clusters];
        let mag = rng.random_range(0.5f64..1.5);
        for t in 0..n {
            let noise: f64 = if spread > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
            data.push((mag * center[t] as f64 + mag * noise_scale * noise) as f32);
        }
    }
    Ok(DenseMatrix::from_vec(b, n, data)?)
}
