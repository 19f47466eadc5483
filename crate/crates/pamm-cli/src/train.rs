//! Paired training runs on the toy attention model: one baseline and one
//! compressed run per seed, fed identical batches, logged per step. The
//! summary compares mean final losses and reports the baseline's own
//! seed-to-seed spread so any parity threshold can be judged against it.

use pamm_core::{derive_seed, Error as CoreError, ModelConfig, Optimizer, PammConfig, ToyModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::errors::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OptChoice {
    Sgd,
    Adam,
}

#[derive(Debug, Clone)]
pub struct TrainingConfig {
    pub seeds: Vec<u64>,
    pub steps: usize,
    pub vocab: usize,
    pub d_model: usize,
    pub seq_len: usize,
    pub batch_seqs: usize,
    pub blocks: usize,
    pub ratio: f64,
    pub epsilon: f64,
    pub optimizer: OptChoice,
    pub lr: f64,
    pub lr_scale: f64,
    /// Fraction of targets replaced by uniform random tokens. The noise gives
    /// the loss an irreducible floor, so converged runs sit at a stable level
    /// instead of racing toward zero, and relative comparisons of final
    /// losses mean something.
    pub label_noise: f64,
    /// Final loss is the mean over this many trailing steps.
    pub tail: usize,
}

impl TrainingConfig {
    /// The standard toy setup: noisy copy-first-token task, one attention
    /// block. Solving it requires attention (the answer sits at position 0);
    /// the noise floor at these defaults is about 1.6 nats.
    pub fn new(seeds: Vec<u64>, steps: usize) -> Self {
        Self {
            seeds,
            steps,
            vocab: 32,
            d_model: 32,
            seq_len: 8,
            batch_seqs: 8,
            blocks: 1,
            ratio: 0.125,
            epsilon: f64::INFINITY,
            optimizer: OptChoice::Adam,
            lr: 3e-3,
            lr_scale: 0.25,
            label_noise: 0.3,
            tail: 50,
        }
    }

    fn validate(&self) -> CliResult<()> {
        if self.seeds.is_empty() {
            return Err(CliError::usage("at least one seed is required"));
        }
        if self.steps == 0 || self.batch_seqs == 0 || self.tail == 0 {
            return Err(CliError::usage("steps, batch size and tail must be positive"));
        }
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return Err(CliError::usage(format!("ratio {} outside (0, 1]", self.ratio)));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(CliError::usage("epsilon must be non-negative or inf"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) || !(self.lr_scale > 0.0) {
            return Err(CliError::usage("learning rate and rate scale must be positive"));
        }
        if !(0.0..1.0).contains(&self.label_noise) {
            return Err(CliError::usage(format!(
                "label noise {} outside [0, 1)",
                self.label_noise
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRow {
    pub method: &'static str,
    pub seed: u64,
    pub step: usize,
    pub loss: f64,
}

pub const TRAIN_HEADER: &str = "method,seed,step,loss";

pub fn train_csv(rows: &[TrainRow]) -> String {
    let mut out = String::from(TRAIN_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.method, r.seed, r.step, r.loss));
    }
    out
}

/// Per-seed final losses; `None` marks a run that went non-finite.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub baseline: Vec<(u64, Option<f64>)>,
    pub pamm: Vec<(u64, Option<f64>)>,
}

impl TrainSummary {
    fn mean(finals: &[(u64, Option<f64>)]) -> Option<f64> {
        let ok: Vec<f64> = finals.iter().filter_map(|&(_, f)| f).collect();
        if ok.is_empty() { None } else { Some(ok.iter().sum::<f64>() / ok.len() as f64) }
    }

    pub fn baseline_mean(&self) -> Option<f64> {
        Self::mean(&self.baseline)
    }

    pub fn pamm_mean(&self) -> Option<f64> {
        Self::mean(&self.pamm)
    }

    /// |pamm − baseline| / baseline over the mean final losses.
    pub fn relative_gap(&self) -> Option<f64> {
        match (self.baseline_mean(), self.pamm_mean()) {
            (Some(b), Some(p)) if b > 0.0 => Some((p - b).abs() / b),
            _ => None,
        }
    }

    /// (max − min) / mean of the baseline final losses: the scale of pure
    /// seed noise any cross-method comparison has to clear.
    pub fn baseline_spread(&self) -> Option<f64> {
        let ok: Vec<f64> = self.baseline.iter().filter_map(|&(_, f)| f).collect();
        let mean = Self::mean(&self.baseline)?;
        if ok.is_empty() || mean <= 0.0 {
            return None;
        }
        let max = ok.iter().cloned().fold(f64::MIN, f64::max);
        let min = ok.iter().cloned().fold(f64::MAX, f64::min);
        Some((max - min) / mean)
    }

    pub fn failed_runs(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (label, list) in [("baseline", &self.baseline), ("pamm", &self.pamm)] {
            for &(seed, f) in list.iter() {
                if f.is_none() {
                    out.push(format!("{label} seed {seed}"));
                }
            }
        }
        out
    }

    pub fn text(&self) -> String {
        let fmt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.6}"),
            None => "n/a".into(),
        };
        let failed = self.failed_runs();
        format!(
            "baseline mean final loss: {} (seed spread (max-min)/mean: {})\n\
             pamm mean final loss:     {}\n\
             relative gap:             {}\n\
             failed runs:              {}\n",
            fmt(self.baseline_mean()),
            fmt(self.baseline_spread()),
            fmt(self.pamm_mean()),
            fmt(self.relative_gap()),
            if failed.is_empty() { "none".into() } else { failed.join(", ") },
        )
    }
}

fn batch(cfg: &TrainingConfig, seed: u64, step: usize) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 22, step as u64));
    let count = cfg.batch_seqs * cfg.seq_len;
    let tokens: Vec<usize> = (0..count).map(|_| rng.random_range(0..cfg.vocab)).collect();
    // Copy task: every position's target is its sequence's first token,
    // flipped to a uniform draw at the noise rate. The batch depends only on
    // (cfg, seed, step), so paired runs see identical data.
    let mut targets: Vec<usize> =
        (0..count).map(|i| tokens[(i / cfg.seq_len) * cfg.seq_len]).collect();
    if cfg.label_noise > 0.0 {
        for t in targets.iter_mut() {
            if rng.random::<f64>() < cfg.label_noise {
                *t = rng.random_range(0..cfg.vocab);
            }
        }
    }
    (tokens, targets)
}

fn run_one(
    cfg: &TrainingConfig,
    seed: u64,
    compressed: bool,
    rows: &mut Vec<TrainRow>,
) -> CliResult<Option<f64>> {
    let mut model_cfg = ModelConfig::new(cfg.vocab, cfg.d_model, cfg.seq_len, cfg.blocks, seed);
    if compressed {
        let pamm_cfg = PammConfig::with_ratio(cfg.ratio, derive_seed(seed, 21, 0))
            .epsilon(cfg.epsilon);
        model_cfg = model_cfg.with_pamm(pamm_cfg).pamm_lr_scale(cfg.lr_scale);
    }
    let mut model = ToyModel::<f32>::new(model_cfg)?;
    let mut opt = match cfg.optimizer {
        OptChoice::Sgd => Optimizer::sgd(cfg.lr),
        OptChoice::Adam => Optimizer::adam(cfg.lr),
    };
    let method = if compressed { "pamm" } else { "baseline" };

    let mut losses = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let (tokens, targets) = batch(cfg, seed, step);
        match model.train_step(&tokens, &targets, &mut opt) {
            Ok(loss) => {
                losses.push(loss);
                rows.push(TrainRow { method, seed, step: step + 1, loss });
            }
            // Divergence ends this run but not the comparison.
            Err(CoreError::Numeric(_)) => return Ok(None),
            Err(e) => return Err(e.into()),
        }
    }
    let tail = cfg.tail.min(losses.len());
    Ok(Some(losses[losses.len() - tail..].iter().sum::<f64>() / tail as f64))
}

pub fn train_toy_comparison(cfg: &TrainingConfig) -> CliResult<(Vec<TrainRow>, TrainSummary)> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut summary = TrainSummary { baseline: Vec::new(), pamm: Vec::new() };
    for &seed in &cfg.seeds {
        let base = run_one(cfg, seed, false, &mut rows)?;
        summary.baseline.push((seed, base));
        let pamm = run_one(cfg, seed, true, &mut rows)?;
        summary.pamm.push((seed, pamm));
    }
    Ok((rows, summary))
}
