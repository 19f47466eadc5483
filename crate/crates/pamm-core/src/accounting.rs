use crate::error::{Error, Result};

/// Storage accounting for one compression: `(k·n + 2b, b·n, dense/compressed)`.
/// The compressed payload is the generator block plus one coefficient and one
/// assignment per row; metadata is O(1) and ignored.
pub fn memory_footprint(b: usize, n: usize, k: usize) -> (usize, usize, f64) {
    let compressed = k * n + 2 * b;
    let dense = b * n;
    (compressed, dense, dense as f64 / compressed as f64)
}

/// Arithmetic-cost ratio of the exact product over the approximate one,
/// `γ = b·m / (k·(b + m))`: the exact `AᵀB` costs `b·n·m` multiplies, the
/// compressed route `b·m` for the contraction plus `k·n·m` for the final
/// product. Above 1 the compressed route is predicted cheaper.
pub fn speedup_gamma(b: usize, m: usize, k: usize) -> Result<f64> {
    if b == 0 || m == 0 || k == 0 {
        return Err(Error::Argument("speedup ratio needs positive dimensions".into()));
    }
    Ok((b as f64 * m as f64) / (k as f64 * (b as f64 + m as f64)))
}
