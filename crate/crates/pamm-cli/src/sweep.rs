//! (r, ε) sweeps over compression methods, one CSV row per grid point and
//! trial. Companion matrices stand in for the gradient that would arrive in
//! a backward pass, so the rows measure trends rather than absolute errors
//! on any particular workload.

use std::time::Instant;

use pamm_core::{
    compress, derive_seed, error_report, DenseMatrix, Error as CoreError, PammConfig,
};

use crate::data::{gaussian_matrix, generate_clustered_data};
use crate::errors::{CliError, CliResult};
use crate::sketch::gaussian_sketch_baseline;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Pamm,
    UniformCrs,
    GaussianSketch,
    Exact,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Pamm => "pamm",
            Method::UniformCrs => "uniform_crs",
            Method::GaussianSketch => "gaussian_sketch",
            Method::Exact => "exact",
        }
    }

    /// Methods without a residual tolerance collapse the ε grid to their one
    /// canonical value: 0 for the sampling baseline (that is its definition),
    /// ∞ for methods that never drop anything.
    fn epsilon_points(self, grid: &[f64]) -> Vec<f64> {
        match self {
            Method::Pamm => grid.to_vec(),
            Method::UniformCrs => vec![0.0],
            Method::GaussianSketch | Method::Exact => vec![f64::INFINITY],
        }
    }
}

#[derive(Debug, Clone)]
pub enum DataSource {
    Gaussian,
    Clustered { clusters: usize, spread: f64 },
    /// Pre-loaded matrix; the same A is used for every trial, only the
    /// companion B varies.
    Matrix(DenseMatrix<f32>),
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub method: Method,
    pub b: usize,
    pub n: usize,
    pub m: usize,
    pub r_grid: Vec<f64>,
    pub epsilon_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub data_source: DataSource,
    /// Off by default: the timing columns print 0.000 so repeated runs are
    /// byte-identical. On, they carry wall-clock milliseconds.
    pub timed: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> CliResult<()> {
        if self.b == 0 || self.n == 0 || self.m == 0 {
            return Err(CliError::usage("b, n and m must all be positive"));
        }
        if self.r_grid.is_empty() || self.epsilon_grid.is_empty() {
            return Err(CliError::usage("r and epsilon grids must be non-empty"));
        }
        if self.trials == 0 {
            return Err(CliError::usage("at least one trial is required"));
        }
        for &r in &self.r_grid {
            if !(r > 0.0 && r <= 1.0) {
                return Err(CliError::usage(format!("ratio {r} outside (0, 1]")));
            }
        }
        for &e in &self.epsilon_grid {
            if e.is_nan() || e < 0.0 {
                return Err(CliError::usage(format!("epsilon {e} must be non-negative or inf")));
            }
        }
        if let DataSource::Matrix(a) = &self.data_source {
            if a.shape() != (self.b, self.n) {
                return Err(CliError::usage(format!(
                    "matrix file is {}x{}, but the sweep asked for b={} n={}",
                    a.rows(),
                    a.cols(),
                    self.b,
                    self.n
                )));
            }
        }
        if let DataSource::Clustered { clusters, spread } = self.data_source {
            if clusters == 0 || clusters > self.b {
                return Err(CliError::usage(format!("cluster count {clusters} outside 1..={}", self.b)));
            }
            if !(spread >= 0.0 && spread.is_finite()) {
                return Err(CliError::usage(format!("spread {spread} must be finite and non-negative")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: &'static str,
    pub r: f64,
    pub epsilon: f64,
    pub trial: usize,
    pub rel_error: f64,
    pub coverage: f64,
    pub eta: usize,
    pub bound_rhs: f64,
    pub compress_ms: f64,
    pub approx_ms: f64,
}

pub const SWEEP_HEADER: &str =
    "method,r,epsilon,trial,rel_error,coverage,eta,bound_rhs,compress_ms,approx_ms";

fn fmt_eps(e: f64) -> String {
    if e.is_infinite() { "inf".into() } else { e.to_string() }
}

fn fmt_bound(v: f64) -> String {
    if v.is_infinite() { "inf".into() } else { format!("{v:.9e}") }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.9e},{},{},{},{:.3},{:.3}\n",
            row.method,
            row.r,
            fmt_eps(row.epsilon),
            row.trial,
            row.rel_error,
            row.coverage,
            row.eta,
            fmt_bound(row.bound_rhs),
            row.compress_ms,
            row.approx_ms,
        ));
    }
    out
}

fn named_grid_point(
    method: Method,
    r: f64,
    eps: f64,
    trial: usize,
) -> impl Fn(CoreError) -> CliError {
    move |e| {
        CliError::Core(CoreError::Numeric(format!(
            "grid point (method={}, r={r}, epsilon={}, trial={trial}) failed: {e}",
            method.label(),
            fmt_eps(eps)
        )))
    }
}

fn trial_matrix(spec: &ExperimentSpec, trial: usize) -> CliResult<DenseMatrix<f32>> {
    let a_seed = derive_seed(spec.seed, 1, trial as u64);
    match &spec.data_source {
        DataSource::Gaussian => Ok(gaussian_matrix(spec.b, spec.n, a_seed)),
        DataSource::Clustered { clusters, spread } => {
            generate_clustered_data(spec.b, spec.n, *clusters, *spread, a_seed)
        }
        DataSource::Matrix(a) => Ok(a.clone()),
    }
}

/// Generator budget for one grid ratio. The stream offset by the ratio index
/// (never the ε index) means every ε point at a fixed (r, trial) reuses the
/// same generator draw, which is what makes coverage comparable along the
/// ε axis.
fn compression_seed(spec: &ExperimentSpec, r_idx: usize, trial: usize) -> u64 {
    derive_seed(spec.seed, 100 + r_idx as u64, trial as u64)
}

pub fn sweep_error_coverage(spec: &ExperimentSpec) -> CliResult<Vec<SweepRow>> {
    spec.validate()?;
    let mut rows = Vec::new();
    for trial in 0..spec.trials {
        let a = trial_matrix(spec, trial)?;
        let b_mat = gaussian_matrix(spec.b, spec.m, derive_seed(spec.seed, 2, trial as u64));
        for (r_idx, &r) in spec.r_grid.iter().enumerate() {
            let seed = compression_seed(spec, r_idx, trial);
            for eps in spec.method.epsilon_points(&spec.epsilon_grid) {
                let ctx = named_grid_point(spec.method, r, eps, trial);
                let row = match spec.method {
                    Method::Exact => {
                        // Zero error by definition; the multiply only runs
                        // when its wall time is wanted.
                        let approx_ms = if spec.timed {
                            let started = Instant::now();
                            let _ = a.tr_mul(&b_mat).map_err(&ctx)?;
                            elapsed_ms(started, true)
                        } else {
                            0.0
                        };
                        SweepRow {
                            method: spec.method.label(),
                            r,
                            epsilon: eps,
                            trial,
                            rel_error: 0.0,
                            coverage: 1.0,
                            eta: 0,
                            bound_rhs: 0.0,
                            compress_ms: 0.0,
                            approx_ms,
                        }
                    }
                    Method::GaussianSketch => {
                        let k = ((r * spec.n as f64).ceil() as usize).clamp(1, spec.n);
                        let started = Instant::now();
                        let (approx, _stored) =
                            gaussian_sketch_baseline(&a, &b_mat, k, seed, false)?;
                        let approx_ms = elapsed_ms(started, spec.timed);
                        let exact = a.tr_mul(&b_mat).map_err(&ctx)?;
                        let rel =
                            pamm_core::relative_error(&exact, &approx).map_err(&ctx)?;
                        SweepRow {
                            method: spec.method.label(),
                            r,
                            epsilon: eps,
                            trial,
                            rel_error: rel,
                            coverage: 1.0,
                            eta: 0,
                            bound_rhs: f64::INFINITY,
                            compress_ms: 0.0,
                            approx_ms,
                        }
                    }
                    Method::Pamm | Method::UniformCrs => {
                        let cfg = PammConfig::with_ratio(r, seed).epsilon(eps);
                        let started = Instant::now();
                        let comp = compress(&a, &cfg).map_err(&ctx)?;
                        let compress_ms = elapsed_ms(started, spec.timed);
                        let started = Instant::now();
                        let report = error_report(&a, &comp, &b_mat).map_err(&ctx)?;
                        let approx_ms = elapsed_ms(started, spec.timed);
                        SweepRow {
                            method: spec.method.label(),
                            r,
                            epsilon: eps,
                            trial,
                            rel_error: report.relative_error,
                            coverage: report.coverage,
                            eta: report.eta,
                            bound_rhs: report.bound_rhs,
                            compress_ms,
                            approx_ms,
                        }
                    }
                };
                rows.push(row);
            }
        }
    }
    // Deterministic output order regardless of how the loops above evolve.
    rows.sort_by(|x, y| {
        x.r.partial_cmp(&y.r)
            .unwrap()
            .then(x.epsilon.partial_cmp(&y.epsilon).unwrap())
            .then(x.trial.cmp(&y.trial))
    });
    Ok(rows)
}

fn elapsed_ms(started: Instant, timed: bool) -> f64 {
    if timed { started.elapsed().as_secs_f64() * 1e3 } else { 0.0 }
}
