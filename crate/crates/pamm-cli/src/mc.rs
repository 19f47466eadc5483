//! Monte-Carlo experiments: empirical validation of the generator-count
//! bound (resample generators, count coverage failures) and of the
//! drop-correction's unbiasedness (Bernoulli row masks, compare the mean
//! estimate against the exact product).

use pamm_core::{
    derive_seed, epsilon_neighborhood_sizes, k_bound, relative_error, DenseMatrix, SeededSampler,
    DEFAULT_NORM_GUARD,
};

use crate::errors::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct KboundResult {
    pub b: usize,
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub n_min: usize,
    pub k: usize,
    pub failures: usize,
    pub trials: usize,
}

impl KboundResult {
    pub fn failure_rate(&self) -> f64 {
        self.failures as f64 / self.trials as f64
    }
}

pub const KBOUND_HEADER: &str = "b,n,epsilon,delta,n_min,k,failures,trials";

pub fn kbound_csv(r: &KboundResult) -> String {
    format!(
        "{}\n{},{},{},{},{},{},{},{}\n",
        KBOUND_HEADER, r.b, r.n, r.epsilon, r.delta, r.n_min, r.k, r.failures, r.trials
    )
}

/// Row-neighborhood membership as bitsets: word `j / 64`, bit `j % 64` of
/// `rows[i]` says row j's line can represent row i within ε. Uses the same
/// residual criterion as the census so the two never disagree.
fn neighborhood_bitsets(a64: &DenseMatrix<f64>, epsilon: f64) -> Vec<Vec<u64>> {
    let b = a64.rows();
    let words = b.div_ceil(64);
    let norms = a64.row_norms();
    let eps_sq = epsilon * epsilon;
    let mut rows = vec![vec![0u64; words]; b];
    for i in 0..b {
        if norms[i] <= DEFAULT_NORM_GUARD {
            // A zero row is represented exactly by anything.
            for w in &mut rows[i] {
                *w = u64::MAX;
            }
            continue;
        }
        let budget = eps_sq * norms[i] * norms[i];
        let ri = a64.row(i);
        for j in 0..b {
            if norms[j] <= DEFAULT_NORM_GUARD {
                continue;
            }
            let rj = a64.row(j);
            let mut dot = 0.0f64;
            for t in 0..a64.cols() {
                dot += ri[t] * rj[t];
            }
            let res_sq = (norms[i] * norms[i] - dot * dot / (norms[j] * norms[j])).max(0.0);
            if res_sq <= budget {
                rows[i][j / 64] |= 1u64 << (j % 64);
            }
        }
    }
    rows
}

/// Draws `trials` independent generator sets of the size the coverage bound
/// prescribes for this matrix and counts how often some row ends up with no
/// admissible generator. A bound k ≥ b is clamped to the full sample, which
/// covers trivially.
pub fn kbound_monte_carlo(
    a: &DenseMatrix<f32>,
    epsilon: f64,
    delta: f64,
    trials: usize,
    seed: u64,
) -> CliResult<KboundResult> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(CliError::usage(format!(
            "the coverage bound needs a finite non-negative epsilon, got {epsilon}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CliError::usage(format!("delta must lie in (0, 1), got {delta}")));
    }
    if trials < 100 {
        return Err(CliError::usage(format!(
            "at least 100 trials are needed for a meaningful rate, got {trials}"
        )));
    }

    let b = a.rows();
    let n = a.cols();
    let (_, n_min) = epsilon_neighborhood_sizes(a, epsilon)?;
    let k = k_bound(b, n_min, delta)?;
    if k >= b {
        return Ok(KboundResult { b, n, epsilon, delta, n_min, k: b, failures: 0, trials });
    }

    let a64 = a.cast::<f64>();
    let rows = neighborhood_bitsets(&a64, epsilon);
    let words = b.div_ceil(64);
    let mut failures = 0usize;
    let mut sampled = vec![0u64; words];
    for t in 0..trials {
        sampled.iter_mut().for_each(|w| *w = 0);
        let sampler = SeededSampler::new(derive_seed(seed, 10, t as u64));
        for j in sampler.sample_without_replacement(b, k)? {
            sampled[j / 64] |= 1u64 << (j % 64);
        }
        let covered = rows
            .iter()
            .all(|row| row.iter().zip(&sampled).any(|(&r, &s)| r & s != 0));
        if !covered {
            failures += 1;
        }
    }
    Ok(KboundResult { b, n, epsilon, delta, n_min, k, failures, trials })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnbiasResult {
    pub b: usize,
    pub n: usize,
    pub m: usize,
    pub keep_prob: f64,
    pub trials: usize,
    pub rel_deviation: f64,
}

pub const UNBIAS_HEADER: &str = "b,n,m,keep_prob,trials,rel_deviation";

pub fn unbias_csv(r: &UnbiasResult) -> String {
    format!(
        "{}\n{},{},{},{},{},{:.9e}\n",
        UNBIAS_HEADER, r.b, r.n, r.m, r.keep_prob, r.trials, r.rel_deviation
    )
}

/// Keeps each row with probability `keep_prob`, rescales the surviving outer
/// products by 1/keep_prob, and measures how far the mean over `trials`
/// masked estimates lands from the exact AᵀB. Accumulation runs in 64-bit.
pub fn estimator_unbiasedness_mc(
    a: &DenseMatrix<f32>,
    b_mat: &DenseMatrix<f32>,
    keep_prob: f64,
    trials: usize,
    seed: u64,
) -> CliResult<UnbiasResult> {
    if !(keep_prob > 0.0 && keep_prob <= 1.0) {
        return Err(CliError::usage(format!("keep probability must lie in (0, 1], got {keep_prob}")));
    }
    if trials == 0 {
        return Err(CliError::usage("at least one trial is required"));
    }
    let (b, n) = a.shape();
    let m = b_mat.cols();
    if b_mat.rows() != b {
        return Err(CliError::Core(pamm_core::Error::Shape {
            context: "unbiasedness companion rows",
            expected: (b, m),
            got: b_mat.shape(),
        }));
    }

    let a64 = a.cast::<f64>();
    let b64 = b_mat.cast::<f64>();
    let exact = a64.tr_mul(&b64)?;
    let beta = 1.0 / keep_prob;

    use rand::{Rng, SeedableRng};
    let mut acc = DenseMatrix::<f64>::zeros(n, m);
    let mut mask = vec![false; b];
    for t in 0..trials {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, 11, t as u64));
        for keep in mask.iter_mut() {
            *keep = rng.random::<f64>() < keep_prob;
        }
        let data = acc.data_mut();
        for i in 0..b {
            if !mask[i] {
                continue;
            }
            let arow = a64.row(i);
            let brow = b64.row(i);
            for (t_idx, &av) in arow.iter().enumerate() {
                let base = t_idx * m;
                let scaled = beta * av;
                for (u, &bv) in brow.iter().enumerate() {
                    data[base + u] += scaled * bv;
                }
            }
        }
    }
    acc.scale_in_place(1.0 / trials as f64);
    let rel_deviation = relative_error(&exact, &acc)?;
    Ok(UnbiasResult { b, n, m, keep_prob, trials, rel_deviation })
}
