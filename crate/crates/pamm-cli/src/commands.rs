//! One function per subcommand. Each run parses its string-valued flags,
//! does the work through the library modules, writes outputs atomically,
//! drops a manifest beside the primary output and prints a short summary.

use std::path::Path;
use std::time::Instant;

use pamm_core::{
    approx_matmul, compress, derive_seed, error_bound_rhs, relative_error, PammConfig,
};

use crate::bench::{bench_run, bench_text};
use crate::cli::{
    ApproxArgs, BenchArgs, Cli, Command, CompressArgs, DataKind, InfoArgs, KboundArgs, SweepArgs,
    TrainArgs, UnbiasArgs,
};
use crate::data::{gaussian_matrix, generate_clustered_data};
use crate::errors::{CliError, CliResult};
use crate::formats::{
    read_compressed, read_matrix, write_atomic, write_compressed, write_matrix_csv,
    COMPRESSED_MAGIC,
};
use crate::manifest::{resolve_output, write_manifest, RunManifest};
use crate::mc::{estimator_unbiasedness_mc, kbound_csv, kbound_monte_carlo, unbias_csv};
use crate::sweep::{sweep_csv, sweep_error_coverage, DataSource, ExperimentSpec};
use crate::train::{train_csv, train_toy_comparison, TrainingConfig};

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.cmd {
        Command::Compress(a) => cmd_compress(&a),
        Command::Approx(a) => cmd_approx(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Kbound(a) => cmd_kbound(&a),
        Command::Unbias(a) => cmd_unbias(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Info(a) => cmd_info(&a),
    }
}

fn parse_epsilon(s: &str) -> CliResult<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("'{s}' is not a tolerance (number or 'inf')")))?;
    if v.is_nan() || v < 0.0 {
        return Err(CliError::usage(format!("tolerance must be non-negative or inf, got {s}")));
    }
    Ok(v)
}

fn parse_f64_list(flag: &str, s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|tok| {
            tok.trim().parse::<f64>().map_err(|_| {
                CliError::usage(format!("--{flag}: '{}' is not a number", tok.trim()))
            })
        })
        .collect()
}

fn parse_u64_list(flag: &str, s: &str) -> CliResult<Vec<u64>> {
    s.split(',')
        .map(|tok| {
            tok.trim().parse::<u64>().map_err(|_| {
                CliError::usage(format!("--{flag}: '{}' is not a seed", tok.trim()))
            })
        })
        .collect()
}

fn eps_str(e: f64) -> String {
    if e.is_infinite() { "inf".into() } else { e.to_string() }
}

fn beta_str(beta: Option<f32>) -> String {
    match beta {
        Some(b) => b.to_string(),
        None => "undefined".into(),
    }
}

fn argv() -> Vec<String> {
    std::env::args().collect()
}

fn finish(mut manifest: RunManifest, started: Instant, outputs: &[&Path]) -> CliResult<()> {
    for out in outputs {
        manifest.record_output(out);
    }
    manifest.wall_ms = started.elapsed().as_secs_f64() * 1e3;
    write_manifest(&manifest)?;
    Ok(())
}

fn cmd_compress(args: &CompressArgs) -> CliResult<()> {
    let started = Instant::now();
    let epsilon = parse_epsilon(&args.epsilon)?;
    let cfg = match (args.ratio, args.k) {
        (Some(r), None) => PammConfig::with_ratio(r, args.seed),
        (None, Some(k)) => PammConfig::with_count(k, args.seed),
        _ => return Err(CliError::usage("pass exactly one of --ratio and --k")),
    }
    .epsilon(epsilon);

    let a = read_matrix(&args.input)?.into_f32();
    let comp = compress(&a, &cfg)?;
    let output = resolve_output(&args.output);
    write_compressed(&output, &comp)?;

    let (stored, dense, ratio) = comp.memory_footprint();
    println!(
        "compressed {}: b={} n={} k={} eta={} beta={} coverage={:.6} scalars {} of {} (ratio {:.3}) -> {}",
        args.input.display(),
        comp.b,
        comp.n,
        comp.k,
        comp.eta,
        beta_str(comp.beta),
        comp.coverage(),
        stored,
        dense,
        ratio,
        output.display(),
    );
    finish(RunManifest::new("compress", args.seed, argv()), started, &[&output])
}

fn cmd_approx(args: &ApproxArgs) -> CliResult<()> {
    let started = Instant::now();
    let comp = read_compressed(&args.compressed)?;
    let b_mat = read_matrix(&args.b_matrix)?.into_f32();
    let product = approx_matmul(&comp, &b_mat)?;
    let output = resolve_output(&args.output);
    write_matrix_csv(&output, &product)?;
    println!(
        "approximate product {}x{} from {} generators -> {}",
        product.rows(),
        product.cols(),
        comp.k,
        output.display(),
    );

    if let Some(original) = &args.exact_check {
        let a = read_matrix(original)?.into_f32();
        let exact = a.tr_mul(&b_mat)?;
        let rel = relative_error(&exact, &product)?;
        if comp.epsilon.is_finite() {
            let rhs = error_bound_rhs(&a, &comp, &b_mat)?;
            println!("exact check: relative_error={rel:.9e} bound_rhs={rhs:.9e}");
        } else {
            println!("exact check: relative_error={rel:.9e} (no bound without a finite tolerance)");
        }
    }
    finish(RunManifest::new("approx", comp.seed, argv()), started, &[&output])
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<()> {
    let started = Instant::now();
    let (data_source, b, n) = match args.data {
        DataKind::Gaussian | DataKind::Clustered => {
            if args.input.is_some() {
                return Err(CliError::usage("--input only applies to --data file"));
            }
            let src = if args.data == DataKind::Gaussian {
                DataSource::Gaussian
            } else {
                DataSource::Clustered { clusters: args.clusters, spread: args.spread }
            };
            (src, args.b, args.n)
        }
        DataKind::File => {
            let path = args
                .input
                .as_ref()
                .ok_or_else(|| CliError::usage("--data file needs --input"))?;
            let a = read_matrix(path)?.into_f32();
            let (b, n) = a.shape();
            (DataSource::Matrix(a), b, n)
        }
    };

    let spec = ExperimentSpec {
        method: args.method,
        b,
        n,
        m: args.m,
        r_grid: parse_f64_list("r-grid", &args.r_grid)?,
        epsilon_grid: parse_f64_list("epsilon-grid", &args.epsilon_grid)?,
        trials: args.trials,
        seed: args.seed,
        data_source,
        timed: args.timed,
    };
    let rows = sweep_error_coverage(&spec)?;
    let output = resolve_output(&args.output);
    write_atomic(&output, sweep_csv(&rows).as_bytes())?;
    println!("swept {} grid rows ({} trials each point) -> {}", rows.len(), spec.trials, output.display());
    finish(RunManifest::new("sweep", args.seed, argv()), started, &[&output])
}

fn cmd_kbound(args: &KboundArgs) -> CliResult<()> {
    let started = Instant::now();
    let epsilon = parse_epsilon(&args.epsilon)?;
    let a = match &args.input {
        Some(path) => read_matrix(path)?.into_f32(),
        None => generate_clustered_data(
            args.b,
            args.n,
            args.clusters,
            args.spread,
            derive_seed(args.seed, 5, 0),
        )?,
    };
    let result = kbound_monte_carlo(&a, epsilon, args.delta, args.trials, args.seed)?;
    let output = resolve_output(&args.output);
    write_atomic(&output, kbound_csv(&result).as_bytes())?;
    println!(
        "coverage bound: n_min={} k={} failures={}/{} (rate {:.4}, allowed {}) -> {}",
        result.n_min,
        result.k,
        result.failures,
        result.trials,
        result.failure_rate(),
        args.delta,
        output.display(),
    );
    finish(RunManifest::new("kbound", args.seed, argv()), started, &[&output])
}

fn cmd_unbias(args: &UnbiasArgs) -> CliResult<()> {
    let started = Instant::now();
    let a = gaussian_matrix(args.b, args.n, derive_seed(args.seed, 1, 0));
    let b_mat = gaussian_matrix(args.b, args.m, derive_seed(args.seed, 2, 0));
    let result = estimator_unbiasedness_mc(&a, &b_mat, args.keep_prob, args.trials, args.seed)?;
    let output = resolve_output(&args.output);
    write_atomic(&output, unbias_csv(&result).as_bytes())?;
    println!(
        "mean of {} masked estimates deviates {:.9e} from the exact product -> {}",
        result.trials,
        result.rel_deviation,
        output.display(),
    );
    finish(RunManifest::new("unbias", args.seed, argv()), started, &[&output])
}

fn cmd_train(args: &TrainArgs) -> CliResult<()> {
    let started = Instant::now();
    let seeds = parse_u64_list("seeds", &args.seeds)?;
    let first_seed = seeds.first().copied().unwrap_or(0);
    let mut cfg = TrainingConfig::new(seeds, args.steps);
    cfg.vocab = args.vocab;
    cfg.d_model = args.d_model;
    cfg.seq_len = args.seq_len;
    cfg.batch_seqs = args.batch_seqs;
    cfg.blocks = args.blocks;
    cfg.ratio = args.ratio;
    cfg.epsilon = parse_epsilon(&args.epsilon)?;
    cfg.optimizer = args.optimizer;
    cfg.lr = args.lr;
    cfg.lr_scale = args.lr_scale;
    cfg.label_noise = args.label_noise;
    cfg.tail = args.tail;

    let (rows, summary) = train_toy_comparison(&cfg)?;
    let output = resolve_output(&args.output);
    write_atomic(&output, train_csv(&rows).as_bytes())?;
    print!("{}", summary.text());
    println!("per-step losses -> {}", output.display());
    finish(RunManifest::new("train", first_seed, argv()), started, &[&output])
}

fn cmd_bench(args: &BenchArgs) -> CliResult<()> {
    let started = Instant::now();
    let epsilon = parse_epsilon(&args.epsilon)?;
    let k = match (args.k, args.ratio) {
        (Some(k), None) => k,
        (None, Some(r)) => {
            if !(r > 0.0 && r <= 1.0) {
                return Err(CliError::usage(format!("ratio {r} outside (0, 1]")));
            }
            ((r * args.b as f64).ceil() as usize).clamp(1, args.b)
        }
        _ => return Err(CliError::usage("pass exactly one of --k and --ratio")),
    };
    let result = bench_run(args.b, args.n, args.m, k, epsilon, args.reps, args.seed)?;
    let text = bench_text(&result);
    let output = resolve_output(&args.output);
    write_atomic(&output, text.as_bytes())?;
    print!("{text}");
    println!("timing summary -> {}", output.display());
    finish(RunManifest::new("bench", args.seed, argv()), started, &[&output])
}

fn cmd_info(args: &InfoArgs) -> CliResult<()> {
    let Some(path) = &args.file else {
        println!("pamm {}", env!("CARGO_PKG_VERSION"));
        println!("matrix files: 'PAMM' magic, version, rows, cols, dtype (f32/f64), row-major data; or CSV text");
        println!("compressed files: 'PAMC' magic with generators, coefficients, assignments and drop metadata");
        println!("experiment outputs: CSV with fixed headers plus a .manifest.json per run");
        return Ok(());
    };

    let mut magic = [0u8; 4];
    {
        use std::io::Read;
        let mut f = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        let n = f.read(&mut magic).map_err(|e| CliError::io(path, e))?;
        if n < 4 {
            magic = [0; 4];
        }
    }
    if &magic == COMPRESSED_MAGIC {
        let comp = read_compressed(path)?;
        let (stored, dense, ratio) = comp.memory_footprint();
        println!("compressed activation {}", path.display());
        println!(
            "b={} n={} k={} eta={} coverage={:.6} epsilon={} beta={} seed={}",
            comp.b,
            comp.n,
            comp.k,
            comp.eta,
            comp.coverage(),
            eps_str(comp.epsilon),
            beta_str(comp.beta),
            comp.seed,
        );
        println!("scalars {stored} of {dense} (ratio {ratio:.3})");
    } else {
        let m = read_matrix(path)?;
        let (rows, cols) = m.shape();
        println!("matrix {}", path.display());
        println!("rows={rows} cols={cols} dtype={}", m.dtype_name());
    }
    Ok(())
}
