use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::sample::splitmix64;
use crate::scalar::Scalar;

/// Seed for the power-iteration start vector. Fixed so repeated estimates of
/// the same matrix are identical and recorded here rather than falling out of
/// some ambient RNG.
pub const SPECTRAL_START_SEED: u64 = 0x51AB_1E5E_ED00_0001;

/// Largest singular value of `b`, estimated by power iteration on `BᵀB`
/// (as two matrix-vector products per step, `BᵀB` is never formed).
/// Returns the estimate and the number of iterations actually used.
/// Stops early once successive estimates agree to within `tol` relative.
pub fn spectral_norm<T: Scalar>(
    b: &DenseMatrix<T>,
    max_iters: usize,
    tol: f64,
) -> Result<(T, usize)> {
    if max_iters == 0 {
        return Err(Error::Argument("max_iters must be at least 1".into()));
    }
    if !b.is_finite() {
        return Err(Error::Numeric("spectral_norm input contains non-finite entries".into()));
    }

    let (rows, cols) = b.shape();
    // Deterministic start direction in [-1, 1]^cols.
    let mut v: alloc::vec::Vec<T> = (0..cols)
        .map(|j| {
            let bits = splitmix64(SPECTRAL_START_SEED.wrapping_add(j as u64));
            let unit = (bits >> 11) as f64 / (1u64 << 53) as f64;
            T::from_f64(2.0 * unit - 1.0)
        })
        .collect();
    normalize(&mut v);

    let tol_t = T::from_f64(tol);
    let mut sigma = T::zero();
    let mut iters = 0;
    let mut u = alloc::vec![T::zero(); rows];
    let mut w = alloc::vec![T::zero(); cols];
    for it in 1..=max_iters {
        iters = it;
        // u = B v
        for i in 0..rows {
            let brow = b.row(i);
            let mut acc = T::zero();
            for j in 0..cols {
                acc += brow[j] * v[j];
            }
            u[i] = acc;
        }
        // w = Bᵀ u
        for x in w.iter_mut() {
            *x = T::zero();
        }
        for i in 0..rows {
            let brow = b.row(i);
            let u_i = u[i];
            for j in 0..cols {
                w[j] += brow[j] * u_i;
            }
        }
        // v is unit, so vᵀw = ‖Bv‖² is the Rayleigh quotient for BᵀB.
        let mut rayleigh = T::zero();
        for j in 0..cols {
            rayleigh += v[j] * w[j];
        }
        let next = rayleigh.max(T::zero()).sqrt();
        let done = (next - sigma).abs() <= tol_t * next.max(T::one());
        sigma = next;

        let wn = norm(&w);
        if wn <= T::epsilon() * T::from_f64(rows as f64) {
            // B annihilates the current direction; for a start vector with
            // support everywhere this means B is (numerically) zero.
            return Ok((T::zero(), iters));
        }
        for j in 0..cols {
            v[j] = w[j] / wn;
        }
        if done && it > 1 {
            break;
        }
    }
    Ok((sigma, iters))
}

fn norm<T: Scalar>(v: &[T]) -> T {
    let mut acc = T::zero();
    for &x in v {
        acc += x * x;
    }
    acc.sqrt()
}

fn normalize<T: Scalar>(v: &mut [T]) {
    let n = norm(v);
    if n > T::zero() {
        for x in v.iter_mut() {
            *x = *x / n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_unit_norm() {
        let (s, _) = spectral_norm(&DenseMatrix::<f64>::identity(4), 1000, 1e-12).unwrap();
        assert!((s - 1.0).abs() < 1e-5);
    }

    #[test]
    fn diagonal_picks_largest_entry() {
        let b = DenseMatrix::from_vec(2, 2, vec![3.0f64, 0.0, 0.0, 1.0]).unwrap();
        let (s, _) = spectral_norm(&b, 1000, 1e-12).unwrap();
        assert!((s - 3.0).abs() < 1e-5);
    }

    #[test]
    fn zero_matrix_reports_zero() {
        let (s, _) = spectral_norm(&DenseMatrix::<f32>::zeros(3, 3), 100, 1e-8).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn random_matrix_matches_long_run_oracle() {
        let mut seed = 0xDEAD_BEEF_u64;
        let mut next = move || {
            seed = splitmix64(seed);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let b = DenseMatrix::<f64>::from_fn(10, 6, |_, _| next());
        let (fast, _) = spectral_norm(&b, 200, 1e-10).unwrap();
        let (oracle, _) = spectral_norm(&b, 10_000, 0.0).unwrap();
        assert!(
            (fast - oracle).abs() / oracle < 1e-3,
            "fast {fast} vs long-run {oracle}"
        );
    }

    #[test]
    fn non_finite_input_is_a_numeric_error() {
        let b = DenseMatrix::from_vec(1, 2, vec![f32::NAN, 1.0]).unwrap();
        assert!(matches!(spectral_norm(&b, 10, 1e-6), Err(Error::Numeric(_))));
    }

    #[test]
    fn estimate_sits_between_frobenius_bounds() {
        let mut seed = 7u64;
        let mut next = move || {
            seed = splitmix64(seed);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for case in 0..20 {
            let rows = 2 + case % 7;
            let cols = 2 + (case * 3) % 5;
            let b = DenseMatrix::<f64>::from_fn(rows, cols, |_, _| next());
            let (s, _) = spectral_norm(&b, 5000, 1e-12).unwrap();
            let fro = b.frobenius_norm();
            let lower = fro / (rows.min(cols) as f64).sqrt();
            assert!(s >= lower - 1e-4, "case {case}: {s} < {lower}");
            assert!(s <= fro + 1e-4, "case {case}: {s} > {fro}");
        }
    }
}
