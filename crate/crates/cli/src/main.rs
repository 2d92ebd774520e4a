use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use co2_core::bounds::{estimate_eigenvalues, BoundInputs};
use co2_core::harness::report::bounds_report;
use co2_core::harness::{emit_reports, run_experiment, ExperimentConfig};
use co2_core::online::InitPolicy;
use co2_core::stream::{build_stream, parse_libsvm, write_stream_csv, StreamMode, StreamSpec};
use co2_core::{Error, LossSpec, PriorityStrategy, Sample};

#[derive(Parser, Debug)]
#[command(name = "co2", version, about = "Coupled online-offline learning on drifting streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a stream and write it as CSV.
    Generate(ExperimentArgs),
    /// Run CO2 and the OGD baselines and write steps.csv, summary.json and bounds.json.
    Run(ExperimentArgs),
    /// Evaluate every bound calculator and print a JSON report.
    Bounds(BoundsArgs),
    /// Check a LIBSVM file and print a short description.
    ParseLibsvm(ParseArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum StrategyArg {
    Fifo,
    Weight,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum InitArg {
    Cold,
    Warm,
    Random,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModeArg {
    Synthetic,
    Libsvm,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single seed (shorthand for --seeds N).
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Comma-separated seeds or a half-open range such as 0..20.
    #[arg(long)]
    seeds: Option<String>,
    /// Number of intervals.
    #[arg(long)]
    g: Option<usize>,
    /// Samples per interval.
    #[arg(long)]
    b: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    /// Seed for --init random.
    #[arg(long, default_value_t = 0)]
    init_seed: u64,
    #[arg(long)]
    drift_std: Option<f64>,
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long)]
    gamma_floor: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// LIBSVM file for --mode libsvm.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory (run) or file (generate; stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// JSON file with every calculator input; flags are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    t: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 200)]
    b: usize,
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Smoothness constant; derived from D and R when omitted.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0.0)]
    regret_ke: f64,
    #[arg(long, default_value_t = 0.0)]
    omega_star: f64,
    #[arg(long, default_value_t = 0.0)]
    weighted_loss: f64,
    /// Comma-separated non-increasing eigenvalues.
    #[arg(long, value_delimiter = ',', conflicts_with = "samples")]
    eigenvalues: Vec<f64>,
    /// LIBSVM file whose second-moment spectrum supplies the eigenvalues.
    #[arg(long)]
    samples: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ParseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    dim: Option<usize>,
}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidArgument(msg.into()).into()
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| config_error(format!("bad seed range {text:?}")))?;
        let hi: u64 = hi.trim().parse().map_err(|_| config_error(format!("bad seed range {text:?}")))?;
        return Ok((lo..hi).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| config_error(format!("bad seed {s:?}"))))
        .collect()
}

fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text).with_context(|| format!("in config {}", path.display()))
}

fn build_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => read_config(path)?,
        None => ExperimentConfig::synthetic(StreamSpec::synthetic(15, 200, 2, 0), vec![0]),
    };
    if let Some(s) = args.seed {
        cfg.seeds = vec![s];
    }
    if let Some(s) = &args.seeds {
        cfg.seeds = parse_seeds(s)?;
    }
    let stream = &mut cfg.stream;
    if let Some(v) = args.g {
        stream.g = v;
    }
    if let Some(v) = args.b {
        stream.b = v;
    }
    if let Some(v) = args.dim {
        stream.dim = v;
    }
    if let Some(v) = args.drift_std {
        stream.drift_std = v;
    }
    if let Some(v) = args.noise_std {
        stream.noise_std = v;
    }
    if let Some(m) = args.mode {
        stream.mode = match m {
            ModeArg::Synthetic => StreamMode::Synthetic,
            ModeArg::Libsvm => StreamMode::Libsvm,
        };
    }
    if let Some(v) = args.kmax {
        cfg.k_max = v;
    }
    if let Some(s) = args.strategy {
        cfg.strategy = match s {
            StrategyArg::Fifo => PriorityStrategy::Fifo,
            StrategyArg::Weight => PriorityStrategy::WeightPriority,
        };
    }
    if let Some(i) = args.init {
        cfg.init = match i {
            InitArg::Cold => InitPolicy::Cold,
            InitArg::Warm => InitPolicy::Warm,
            InitArg::Random => InitPolicy::Random { seed: args.init_seed },
        };
    }
    if let Some(v) = args.gamma_floor {
        cfg.gamma_floor = v;
    }
    if args.input.is_some() {
        cfg.input = args.input.clone();
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    cfg.validate()?;
    if cfg.stream.mode == StreamMode::Libsvm && cfg.input.is_none() {
        bail!(config_error("--mode libsvm needs --input"));
    }
    Ok(cfg)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e }.into())
}

fn load_dataset(cfg: &ExperimentConfig) -> Result<Option<Vec<Sample>>> {
    match (&cfg.stream.mode, &cfg.input) {
        (StreamMode::Libsvm, Some(path)) => {
            let samples = parse_libsvm(&read_text(path)?, Some(cfg.stream.dim))
                .with_context(|| format!("in {}", path.display()))?;
            Ok(Some(samples))
        }
        _ => Ok(None),
    }
}

fn cmd_generate(args: &ExperimentArgs) -> Result<()> {
    let cfg = build_config(args)?;
    let dataset = load_dataset(&cfg)?;
    let spec = StreamSpec { seed: cfg.seeds[0], ..cfg.stream.clone() };
    let stream = build_stream(&spec, dataset.as_deref())?;
    let csv = write_stream_csv(&stream.intervals);
    match &cfg.out {
        Some(path) => fs::write(path, csv).map_err(|e| Error::Io { path: path.clone(), source: e })?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_run(args: &ExperimentArgs) -> Result<()> {
    let cfg = build_config(args)?;
    let out = cfg.out.clone().ok_or_else(|| config_error("run needs --out <dir>"))?;
    let dataset = load_dataset(&cfg)?;
    let report = run_experiment(&cfg, dataset.as_deref())?;
    let paths = emit_reports(&report, &out)?;
    println!("{}", serde_json::to_string_pretty(&report.aggregate)?);
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_bounds(args: &BoundsArgs) -> Result<()> {
    let inputs: BoundInputs = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?
        }
        None => {
            let beta = match args.beta {
                Some(b) => b,
                None => LossSpec::new(args.d, args.r, 1)?.beta(),
            };
            let eigenvalues = match &args.samples {
                Some(path) => estimate_eigenvalues(&parse_libsvm(&read_text(path)?, None)?)?,
                None => args.eigenvalues.clone(),
            };
            BoundInputs {
                t: args.t,
                k: args.k,
                b: args.b,
                d: args.d,
                r: args.r,
                beta,
                gamma: args.gamma,
                delta: args.delta,
                regret_ke: args.regret_ke,
                omega_star: args.omega_star,
                weighted_loss: args.weighted_loss,
                eigenvalues,
            }
        }
    };
    println!("{}", serde_json::to_string_pretty(&bounds_report(&inputs)?)?);
    Ok(())
}

fn cmd_parse(args: &ParseArgs) -> Result<()> {
    let samples = parse_libsvm(&read_text(&args.input)?, args.dim)
        .with_context(|| format!("in {}", args.input.display()))?;
    let pos = samples.iter().filter(|s| s.y.sign() > 0.0).count();
    let max_norm = samples.iter().map(Sample::norm).fold(0.0, f64::max);
    let summary = serde_json::json!({
        "samples": samples.len(),
        "dim": samples.first().map_or(args.dim.unwrap_or(0), Sample::dim),
        "positive": pos,
        "negative": samples.len() - pos,
        "max_norm": max_norm,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

/// 1 for configuration problems, 2 for bad data, 3 when a guarantee failed.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>().map(Error::root) {
        Some(Error::InvariantViolation(_)) => 3,
        Some(
            Error::Parse { .. }
            | Error::Io { .. }
            | Error::InsufficientSamples { .. }
            | Error::DimensionMismatch { .. }
            | Error::Domain(_)
            | Error::NonConvergence { .. },
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Run(a) => cmd_run(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::ParseLibsvm(a) => cmd_parse(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
