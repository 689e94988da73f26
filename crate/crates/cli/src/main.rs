use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phaseless::estimation::{NoiseKind, NoiseModel};
use phaseless::harness::{
    self, Algorithm, ExperimentConfig, FrameSpec, OutputFormat, OutputSpec, Report, Task, SCHEMA,
};
use phaseless::injectivity::{self, NetOptions};
use phaseless::{Ensemble, Error, Frame};
use serde_json::json;

#[derive(Parser)]
#[command(name = "phaseless", version, about = "Phase retrieval experiments: certification, bounds, CRLB and reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or inspect frames.
    #[command(subcommand)]
    Frame(FrameCommand),
    /// Certify frames and estimate the global stability bounds.
    Bounds(ExperimentArgs),
    /// Cramer-Rao reference curve against Monte-Carlo estimator errors.
    Crlb(ExperimentArgs),
    /// Reconstruction benchmark.
    Recon(ExperimentArgs),
    /// Reconstruction benchmark over a grid of noise levels.
    Sweep(ExperimentArgs),
    /// Recompute aggregates of a saved report and print them.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum FrameCommand {
    /// Draw a random frame.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value = "gaussian")]
        ensemble: EnsembleArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Frame bounds, spark and phase retrievability of a frame file.
    Check {
        frame: PathBuf,
        /// Maximum number of n-subsets examined by the spark test.
        #[arg(long, default_value_t = phaseless::frames::DEFAULT_SPARK_CAP)]
        spark_cap: u128,
        /// Eigenvalue evaluations allowed for complex certification.
        #[arg(long, default_value_t = NetOptions::default().budget)]
        budget: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EnsembleArg {
    Gaussian,
    UniformSphere,
    RealGaussian,
}

impl From<EnsembleArg> for Ensemble {
    fn from(e: EnsembleArg) -> Self {
        match e {
            EnsembleArg::Gaussian => Ensemble::Gaussian,
            EnsembleArg::UniformSphere => Ensemble::UniformSphere,
            EnsembleArg::RealGaussian => Ensemble::RealGaussian,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Lifted,
    PhaseLift,
    GerchbergSaxton,
    WirtingerFlow,
    Irls,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Lifted => Algorithm::Lifted,
            AlgorithmArg::PhaseLift => Algorithm::PhaseLift,
            AlgorithmArg::GerchbergSaxton => Algorithm::GerchbergSaxton,
            AlgorithmArg::WirtingerFlow => Algorithm::WirtingerFlow,
            AlgorithmArg::Irls => Algorithm::Irls,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Awgn,
    Nonawgn,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

/// A config file plus overrides; without a config the frame must be given
/// by `--frame` or `--n`/`--m`.
#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Frame file.
    #[arg(long, conflicts_with_all = ["n", "m"])]
    frame: Option<PathBuf>,
    #[arg(long, requires = "m")]
    n: Option<usize>,
    #[arg(long, requires = "n")]
    m: Option<usize>,
    #[arg(long, value_enum)]
    ensemble: Option<EnsembleArg>,
    #[arg(long)]
    frame_seed: Option<u64>,
    /// Draw a new ensemble frame for every trial.
    #[arg(long)]
    per_trial: bool,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// 1 runs trials sequentially, 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, value_delimiter = ',')]
    algorithms: Vec<AlgorithmArg>,
    #[arg(long, value_enum)]
    noise: Option<NoiseArg>,
    /// Noise level for `recon`.
    #[arg(long)]
    level: Option<f64>,
    /// Noise levels for `sweep` and `crlb`.
    #[arg(long, value_delimiter = ',')]
    levels: Vec<f64>,
    #[arg(long)]
    success_threshold: Option<f64>,
    #[arg(long)]
    budget: Option<usize>,
    /// Report file; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct ReportArgs {
    report: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Emit per-trial records instead of aggregates (CSV only).
    #[arg(long)]
    records: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::BudgetExceeded(_) | Error::CombinatorialBudgetExceeded { .. } => 4,
        _ => 3,
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Config(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn build_config(task: Task, a: &ExperimentArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &a.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let frame = match (&a.frame, a.n, a.m) {
                (Some(path), _, _) => FrameSpec::File { path: path.clone() },
                (None, Some(n), Some(m)) => FrameSpec::Ensemble {
                    n,
                    m,
                    ensemble: a.ensemble.map_or(Ensemble::Gaussian, Into::into),
                    seed: a.frame_seed.unwrap_or(0),
                    per_trial: a.per_trial,
                },
                _ => return Err(Error::Config("give --config, --frame, or --n and --m".into())),
            };
            ExperimentConfig::new(frame, task, 1, 0)
        }
    };
    cfg.task = task;
    if a.config.is_some() {
        if let Some(path) = &a.frame {
            cfg.frame = FrameSpec::File { path: path.clone() };
        }
        if let FrameSpec::Ensemble { ensemble, seed, per_trial, .. } = &mut cfg.frame {
            if let Some(e) = a.ensemble {
                *ensemble = e.into();
            }
            if let Some(s) = a.frame_seed {
                *seed = s;
            }
            *per_trial |= a.per_trial;
        }
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(t) = a.threads {
        cfg.threads = t;
    }
    if !a.algorithms.is_empty() {
        cfg.algorithms = a.algorithms.iter().map(|&x| x.into()).collect();
    }
    if !a.levels.is_empty() {
        cfg.levels = a.levels.clone();
    }
    if a.noise.is_some() || a.level.is_some() {
        let kind = match a.noise {
            Some(NoiseArg::Nonawgn) => NoiseKind::NonAwgn,
            Some(NoiseArg::Awgn) => NoiseKind::Awgn,
            None => cfg.noise.map_or(NoiseKind::Awgn, |n| n.kind),
        };
        let level = a.level.or(cfg.noise.map(|n| n.level())).unwrap_or(0.0);
        let seed = cfg.noise.map_or(0, |n| n.seed);
        cfg.noise = Some(match kind {
            NoiseKind::Awgn => NoiseModel::awgn(level, seed),
            NoiseKind::NonAwgn => NoiseModel::nonawgn(level, seed),
        });
    }
    if let Some(t) = a.success_threshold {
        cfg.success_threshold = t;
    }
    if let Some(b) = a.budget {
        cfg.net.budget = b;
    }
    Ok(cfg)
}

fn run_experiment_verb(task: Task, a: &ExperimentArgs) -> Result<(), Error> {
    let mut cfg = build_config(task, a)?;
    // the CLI writes the output itself so that --out/--format override the config
    let target = cfg.output.take();
    let format = match (a.format, &target) {
        (Some(FormatArg::Csv), _) => OutputFormat::Csv,
        (Some(FormatArg::Json), _) => OutputFormat::Json,
        (None, Some(t)) => t.format,
        (None, None) => OutputFormat::Json,
    };
    let path = a.out.clone().or(target.map(|t| t.path));
    let report = harness::run_experiment(&cfg)?;
    let mut echoed = report.clone();
    echoed.config.output = path.clone().map(|path| OutputSpec { path, format });
    let text = match format {
        OutputFormat::Json => echoed.to_json(),
        OutputFormat::Csv => echoed.table_csv()?,
    };
    emit(&text, path.as_deref())
}

fn frame_check(path: &Path, spark_cap: u128, budget: usize) -> Result<(), Error> {
    let frame = Frame::load(path).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("{}: {io}", path.display())),
        other => other,
    })?;
    let (lower, upper) = frame.frame_bounds()?;
    let spark = frame.is_full_spark_with_cap(spark_cap)?;
    let cert = if frame.is_real() {
        injectivity::pr_check_real(&frame)?
    } else {
        injectivity::pr_certify_complex_with(&frame, &NetOptions { budget, ..Default::default() })?
    };
    let text = json!({
        "n": frame.n(),
        "m": frame.m(),
        "field": frame.field(),
        "frame_bounds": [lower, upper],
        "full_spark": spark,
        "certificate": cert,
    });
    emit(&serde_json::to_string_pretty(&text)?, None)
}

fn report(a: &ReportArgs) -> Result<(), Error> {
    let text = std::fs::read_to_string(&a.report).map_err(|e| Error::Config(format!("{}: {e}", a.report.display())))?;
    let mut report = Report::from_json(&text).map_err(|e| Error::Config(e.to_string()))?;
    if report.schema != SCHEMA {
        return Err(Error::Config(format!("unsupported report schema {:?}", report.schema)));
    }
    report.aggregates = harness::aggregate(&report.records, report.config.success_threshold);
    let out = match (a.format, a.records) {
        (FormatArg::Csv, true) => report.records_csv()?,
        (FormatArg::Csv, false) => report.table_csv()?,
        (FormatArg::Json, _) => serde_json::to_string_pretty(&json!({
            "aggregates": report.aggregates,
            "crlb": report.crlb,
        }))?,
    };
    emit(&out, None)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Frame(FrameCommand::Gen { n, m, ensemble, seed, out }) => {
            let frame = Frame::random(n, m, ensemble.into(), seed).map_err(|e| match e {
                Error::TooFewVectors { .. } => Error::Config(e.to_string()),
                other => other,
            })?;
            emit(&frame.to_json(), out.as_deref())
        }
        Command::Frame(FrameCommand::Check { frame, spark_cap, budget }) => frame_check(&frame, spark_cap, budget),
        Command::Bounds(a) => run_experiment_verb(Task::Bounds, &a),
        Command::Crlb(a) => run_experiment_verb(Task::Crlb, &a),
        Command::Recon(a) => run_experiment_verb(Task::Reconstruct, &a),
        Command::Sweep(a) => run_experiment_verb(Task::Sweep, &a),
        Command::Report(a) => report(&a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
