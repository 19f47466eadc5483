//! Flag definitions. Grid-valued and epsilon-valued flags arrive as plain
//! strings ("0,0.5,inf") and are parsed with real error messages in the
//! command layer, so every complaint lands on the usage exit code.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::sweep::Method;
use crate::train::OptChoice;

#[derive(Debug, Parser)]
#[command(
    name = "pamm",
    version,
    about = "Generator-based activation compression and approximate transpose products",
    long_about = "Compress tall matrices into a few generator rows, multiply straight from the \
                  compressed form, and run the seeded experiments around the method: error and \
                  coverage sweeps, Monte-Carlo checks, toy training comparisons and timing runs.\n\
                  Relative output paths land in $PAMM_OUT_DIR when it is set; every run leaves a \
                  .manifest.json with its argv and seeds beside the primary output."
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compress a matrix file into generator form (writes a .pamc blob)
    Compress(CompressArgs),
    /// Multiply a compressed activation against a companion matrix
    Approx(ApproxArgs),
    /// Error/coverage sweep over (r, epsilon) grids and trials
    Sweep(SweepArgs),
    /// Monte-Carlo check of the generator-count coverage bound
    Kbound(KboundArgs),
    /// Monte-Carlo check of the drop-correction unbiasedness
    Unbias(UnbiasArgs),
    /// Paired baseline/compressed training on the toy attention model
    Train(TrainArgs),
    /// Median wall times for exact/compress/approx plus analytic numbers
    Bench(BenchArgs),
    /// Describe a matrix or compressed file, or the tool itself
    Info(InfoArgs),
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    /// Matrix file: binary or CSV (one comma-separated row per line)
    #[arg(long)]
    pub input: PathBuf,
    /// Generator budget as a fraction of rows, rounded up (exactly one of --ratio/--k)
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Generator budget as an explicit count (exactly one of --ratio/--k)
    #[arg(long)]
    pub k: Option<usize>,
    /// Residual drop tolerance; "inf" disables dropping
    #[arg(long, default_value = "inf")]
    pub epsilon: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ApproxArgs {
    /// Compressed activation (.pamc) file
    #[arg(long)]
    pub compressed: PathBuf,
    /// Companion matrix with one row per original activation row
    #[arg(long)]
    pub b_matrix: PathBuf,
    /// Product destination, written as CSV
    #[arg(long)]
    pub output: PathBuf,
    /// Original uncompressed matrix: recompute the exact product and report
    /// the relative error (and the error bound when the tolerance is finite)
    #[arg(long)]
    pub exact_check: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DataKind {
    Gaussian,
    Clustered,
    File,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    /// Rows of each trial matrix (ignored with --data file)
    #[arg(long, default_value_t = 1024)]
    pub b: usize,
    /// Columns of each trial matrix (ignored with --data file)
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// Columns of the Gaussian companion standing in for an incoming gradient
    #[arg(long, default_value_t = 32)]
    pub m: usize,
    /// Comma-separated generator ratios in (0, 1]
    #[arg(long, default_value = "0.0625")]
    pub r_grid: String,
    /// Comma-separated tolerances; "inf" entries allowed
    #[arg(long, default_value = "inf")]
    pub epsilon_grid: String,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = DataKind::Gaussian)]
    pub data: DataKind,
    /// Cluster count for --data clustered
    #[arg(long, default_value_t = 8)]
    pub clusters: usize,
    /// Relative perturbation for --data clustered
    #[arg(long, default_value_t = 0.1)]
    pub spread: f64,
    /// Matrix file for --data file
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Destination CSV
    #[arg(long)]
    pub output: PathBuf,
    /// Record wall times in the *_ms columns (costs byte-reproducibility)
    #[arg(long, default_value_t = false)]
    pub timed: bool,
}

#[derive(Debug, Args)]
pub struct KboundArgs {
    #[arg(long, default_value_t = 1024)]
    pub b: usize,
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 8)]
    pub clusters: usize,
    #[arg(long, default_value_t = 0.05)]
    pub spread: f64,
    /// Neighborhood tolerance; must be finite here
    #[arg(long, default_value = "0.3")]
    pub epsilon: String,
    /// Allowed coverage-failure probability
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use this matrix file instead of clustered synthetic data
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Destination CSV
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct UnbiasArgs {
    #[arg(long, default_value_t = 64)]
    pub b: usize,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    /// Bernoulli row-keep probability in (0, 1]
    #[arg(long, default_value_t = 0.5)]
    pub keep_prob: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Destination CSV
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Comma-separated model seeds; each trains one baseline and one
    /// compressed run on identical batches
    #[arg(long, default_value = "1,2,3")]
    pub seeds: String,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    #[arg(long, default_value_t = 32)]
    pub vocab: usize,
    #[arg(long, default_value_t = 32)]
    pub d_model: usize,
    #[arg(long, default_value_t = 8)]
    pub seq_len: usize,
    /// Sequences per batch
    #[arg(long, default_value_t = 8)]
    pub batch_seqs: usize,
    /// Attention blocks (0 to 2)
    #[arg(long, default_value_t = 1)]
    pub blocks: usize,
    /// Generator ratio for the compressed run
    #[arg(long, default_value_t = 0.125)]
    pub ratio: f64,
    /// Residual drop tolerance for the compressed run; "inf" disables drops
    #[arg(long, default_value = "inf")]
    pub epsilon: String,
    #[arg(long, value_enum, default_value_t = OptChoice::Adam)]
    pub optimizer: OptChoice,
    #[arg(long, default_value_t = 3e-3)]
    pub lr: f64,
    /// Learning-rate multiplier on the compressed projection layers
    #[arg(long, default_value_t = 0.25)]
    pub lr_scale: f64,
    /// Fraction of targets replaced by uniform noise; keeps the converged
    /// loss on a stable floor instead of racing toward zero
    #[arg(long, default_value_t = 0.3)]
    pub label_noise: f64,
    /// Final loss averages over this many trailing steps
    #[arg(long, default_value_t = 50)]
    pub tail: usize,
    /// Destination CSV of per-step losses
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 4096)]
    pub b: usize,
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 256)]
    pub m: usize,
    /// Generator count (exactly one of --k/--ratio)
    #[arg(long)]
    pub k: Option<usize>,
    /// Generator ratio (exactly one of --k/--ratio)
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long, default_value = "inf")]
    pub epsilon: String,
    /// Repetitions per phase; medians are reported (at least 5)
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Destination for the timing summary text
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    /// File to describe; without it, prints tool and format information
    pub file: Option<PathBuf>,
}
