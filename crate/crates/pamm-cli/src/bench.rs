//! Wall-clock measurement of the three phases (exact product, compression,
//! approximate product) plus the analytic speedup and footprint numbers.
//! Times are medians over repeated runs; absolute values are machine facts,
//! not assertions.

use std::time::Instant;

use pamm_core::{approx_matmul, compress, derive_seed, memory_footprint, speedup_gamma, PammConfig};

use crate::data::gaussian_matrix;
use crate::errors::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub b: usize,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub reps: usize,
    pub exact_ms: f64,
    pub compress_ms: f64,
    pub approx_ms: f64,
    pub gamma: f64,
    pub compressed_scalars: usize,
    pub dense_scalars: usize,
    pub footprint_ratio: f64,
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        0.5 * (samples[mid - 1] + samples[mid])
    }
}

pub fn bench_run(
    b: usize,
    n: usize,
    m: usize,
    k: usize,
    epsilon: f64,
    reps: usize,
    seed: u64,
) -> CliResult<BenchResult> {
    if b == 0 || n == 0 || m == 0 {
        return Err(CliError::usage("b, n and m must all be positive"));
    }
    if k == 0 || k > b {
        return Err(CliError::usage(format!("k must lie in 1..={b}, got {k}")));
    }
    if reps < 5 {
        return Err(CliError::usage(format!("medians need at least 5 repetitions, got {reps}")));
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(CliError::usage("epsilon must be non-negative or inf"));
    }

    let a = gaussian_matrix(b, n, derive_seed(seed, 1, 0));
    let b_mat = gaussian_matrix(b, m, derive_seed(seed, 2, 0));
    let cfg = PammConfig::with_count(k, derive_seed(seed, 3, 0)).epsilon(epsilon);

    let mut exact_t = Vec::with_capacity(reps);
    let mut compress_t = Vec::with_capacity(reps);
    let mut approx_t = Vec::with_capacity(reps);
    for _ in 0..reps {
        let started = Instant::now();
        let exact = a.tr_mul(&b_mat)?;
        exact_t.push(started.elapsed().as_secs_f64() * 1e3);
        drop(exact);

        let started = Instant::now();
        let comp = compress(&a, &cfg)?;
        compress_t.push(started.elapsed().as_secs_f64() * 1e3);

        let started = Instant::now();
        let approx = approx_matmul(&comp, &b_mat)?;
        approx_t.push(started.elapsed().as_secs_f64() * 1e3);
        drop(approx);
    }

    let (compressed_scalars, dense_scalars, footprint_ratio) = memory_footprint(b, n, k);
    Ok(BenchResult {
        b,
        n,
        m,
        k,
        reps,
        exact_ms: median(&mut exact_t),
        compress_ms: median(&mut compress_t),
        approx_ms: median(&mut approx_t),
        gamma: speedup_gamma(b, m, k)?,
        compressed_scalars,
        dense_scalars,
        footprint_ratio,
    })
}

pub fn bench_text(r: &BenchResult) -> String {
    format!(
        "b={} n={} m={} k={} reps={}\n\
         median ms: exact={:.3} compress={:.3} approx={:.3}\n\
         theoretical speedup gamma={:.3}\n\
         activation scalars: compressed={} dense={} ratio={:.3}\n",
        r.b,
        r.n,
        r.m,
        r.k,
        r.reps,
        r.exact_ms,
        r.compress_ms,
        r.approx_ms,
        r.gamma,
        r.compressed_scalars,
        r.dense_scalars,
        r.footprint_ratio,
    )
}
