//! Seeded experiment runner: certification, bounds, Cramer-Rao reference
//! curves and reconstruction benchmarks driven by a JSON configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{self, NoiseKind, NoiseModel};
use crate::frames::{Ensemble, Frame, FrameFile};
use crate::injectivity::{self, NetOptions, Verdict};
use crate::lifting::Norm;
use crate::linalg::CVec;
use crate::metrics::{align_phase, mat_dist, nat_dist};
use crate::recon::{self, GsOptions, IrlsOptions, PhaseLiftOptions, ReconResult, ScaleMode, WfOptions};
use crate::rng;

pub const SCHEMA: &str = "phaseless-experiment/1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum FrameSpec {
    Inline(FrameFile),
    File {
        path: PathBuf,
    },
    Ensemble {
        n: usize,
        m: usize,
        ensemble: Ensemble,
        seed: u64,
        /// Draw a fresh frame for every trial from the trial seed.
        #[serde(default)]
        per_trial: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Certify,
    Bounds,
    Crlb,
    Reconstruct,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Lifted,
    PhaseLift,
    GerchbergSaxton,
    WirtingerFlow,
    Irls,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Lifted => "lifted",
            Algorithm::PhaseLift => "phase_lift",
            Algorithm::GerchbergSaxton => "gerchberg_saxton",
            Algorithm::WirtingerFlow => "wirtinger_flow",
            Algorithm::Irls => "irls",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub phaselift: PhaseLiftOptions,
    pub gs: GsOptions,
    pub wf: WfOptions,
    pub irls: IrlsOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: PathBuf,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema: String,
    pub frame: FrameSpec,
    pub task: Task,
    #[serde(default)]
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub options: SolverOptions,
    /// Noise model; for `crlb` and `sweep` its level is replaced by each
    /// entry of `levels`.
    #[serde(default)]
    pub noise: Option<NoiseModel>,
    #[serde(default)]
    pub levels: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// `1` runs trials sequentially; `0` uses every core.
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// Success means `D_2(x_hat, x) / ||x|| <= success_threshold`.
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    #[serde(default)]
    pub net: NetOptions,
    #[serde(default = "default_samples")]
    pub bounds_samples: usize,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

fn default_threads() -> usize {
    1
}

fn default_threshold() -> f64 {
    1e-5
}

fn default_samples() -> usize {
    2000
}

impl ExperimentConfig {
    pub fn new(frame: FrameSpec, task: Task, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            schema: SCHEMA.into(),
            frame,
            task,
            algorithms: Vec::new(),
            options: SolverOptions::default(),
            noise: None,
            levels: Vec::new(),
            trials,
            seed,
            threads: default_threads(),
            success_threshold: default_threshold(),
            net: NetOptions::default(),
            bounds_samples: default_samples(),
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config; relative frame and output paths are taken relative to
    /// the config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let FrameSpec::File { path } = &mut cfg.frame {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if let Some(out) = &mut cfg.output {
            if out.path.is_relative() {
                out.path = base.join(&out.path);
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.schema != SCHEMA {
            return bad(format!("unsupported schema {:?}, expected {SCHEMA:?}", self.schema));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if let FrameSpec::File { path } = &self.frame {
            if !path.exists() {
                return bad(format!("frame file {} does not exist", path.display()));
            }
        }
        let needs_algorithms = matches!(self.task, Task::Reconstruct | Task::Sweep | Task::Crlb);
        if needs_algorithms && self.algorithms.is_empty() {
            return bad(format!("task {:?} needs at least one algorithm", self.task));
        }
        if matches!(self.task, Task::Sweep | Task::Crlb) {
            if self.levels.is_empty() {
                return bad(format!("task {:?} needs a non-empty list of noise levels", self.task));
            }
            if self.levels.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                return bad("noise levels must be finite and non-negative".into());
            }
            if self.task == Task::Crlb && self.levels.iter().any(|l| *l == 0.0) {
                return bad("the Cramer-Rao bound needs positive noise levels".into());
            }
        }
        if let Some(noise) = &self.noise {
            noise.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if !(self.success_threshold > 0.0) {
            return bad("success_threshold must be positive".into());
        }
        Ok(())
    }

    fn noise_at(&self, level: f64, seed: u64) -> NoiseModel {
        match self.noise.map(|n| n.kind).unwrap_or(NoiseKind::Awgn) {
            NoiseKind::Awgn => NoiseModel::awgn(level, seed),
            NoiseKind::NonAwgn => NoiseModel::nonawgn(level, seed),
        }
    }
}

/// Bound estimates stored per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsSummary {
    #[serde(rename = "A0")]
    pub big_a0: f64,
    #[serde(rename = "B0")]
    pub big_b0: f64,
    pub a0: f64,
    pub b0: f64,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<Algorithm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1_error: Option<f64>,
    /// Squared error after anchoring the phase at the true signal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub squared_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    fn new(trial: usize, seed: u64) -> Self {
        TrialRecord {
            trial,
            seed,
            algorithm: None,
            level: None,
            d2_error: None,
            relative_error: None,
            d1_error: None,
            squared_error: None,
            residual: None,
            iterations: None,
            converged: None,
            verdict: None,
            a0_lower: None,
            bounds: None,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<Algorithm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    pub count: usize,
    pub failures: usize,
    /// Statistics of `relative_error` (reconstruction) or `a0_lower`
    /// (certification).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub median: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q05: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q95: Option<f64>,
    /// Fraction of trials with relative error at most the threshold, or
    /// with a `Retrievable` verdict.
    pub success_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_iterations: Option<f64>,
    /// Mean squared error after phase anchoring.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrlbRow {
    pub level: f64,
    pub trace_crlb: f64,
    /// Monte-Carlo mean squared error per algorithm name.
    pub mse: BTreeMap<String, f64>,
    pub trials: usize,
}

/// Wall-clock data; excluded from the determinism contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Seconds since the Unix epoch at the start of the run.
    pub timestamp: f64,
    pub total_seconds: f64,
    /// Wall time of each trial, in trial order.
    pub trial_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crlb: Option<Vec<CrlbRow>>,
    pub timing: Timing,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report without the `timing` field.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Per-trial records as CSV.
    pub fn records_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "trial",
            "seed",
            "algorithm",
            "level",
            "d2_error",
            "relative_error",
            "d1_error",
            "squared_error",
            "residual",
            "iterations",
            "converged",
            "verdict",
            "a0_lower",
            "error",
        ])?;
        let f = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.trial.to_string(),
                r.seed.to_string(),
                r.algorithm.map(|a| a.name().to_string()).unwrap_or_default(),
                f(r.level),
                f(r.d2_error),
                f(r.relative_error),
                f(r.d1_error),
                f(r.squared_error),
                f(r.residual),
                r.iterations.map(|v| v.to_string()).unwrap_or_default(),
                r.converged.map(|v| v.to_string()).unwrap_or_default(),
                r.verdict.map(|v| format!("{v:?}")).unwrap_or_default(),
                f(r.a0_lower),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        csv_string(w)
    }

    pub fn aggregates_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "algorithm",
            "level",
            "count",
            "failures",
            "mean",
            "median",
            "q05",
            "q95",
            "success_rate",
            "mean_iterations",
            "mse",
        ])?;
        let f = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for a in &self.aggregates {
            w.write_record([
                a.algorithm.map(|a| a.name().to_string()).unwrap_or_default(),
                f(a.level),
                a.count.to_string(),
                a.failures.to_string(),
                f(a.mean),
                f(a.median),
                f(a.q05),
                f(a.q95),
                a.success_rate.to_string(),
                f(a.mean_iterations),
                f(a.mse),
            ])?;
        }
        csv_string(w)
    }

    /// The reference table of a `crlb` run, or the aggregates otherwise.
    pub fn table_csv(&self) -> Result<String> {
        match &self.crlb {
            Some(rows) => crlb_csv(rows),
            None => self.aggregates_csv(),
        }
    }
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn crlb_csv(rows: &[CrlbRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let names: Vec<String> = rows.first().map(|r| r.mse.keys().cloned().collect()).unwrap_or_default();
    let mut header = vec!["level".to_string(), "trace_crlb".to_string()];
    header.extend(names.iter().map(|n| format!("mse_{n}")));
    header.push("trials".into());
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.level.to_string(), r.trace_crlb.to_string()];
        rec.extend(names.iter().map(|n| r.mse.get(n).map(|v| v.to_string()).unwrap_or_default()));
        rec.push(r.trials.to_string());
        w.write_record(&rec)?;
    }
    csv_string(w)
}

/// Linearly interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Groups records by `(algorithm, level)` in order of first appearance and
/// summarises each group.
pub fn aggregate(records: &[TrialRecord], threshold: f64) -> Vec<Aggregate> {
    let mut keys: Vec<(Option<Algorithm>, Option<u64>)> = Vec::new();
    for r in records {
        let key = (r.algorithm, r.level.map(f64::to_bits));
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(alg, level)| {
            let group: Vec<&TrialRecord> =
                records.iter().filter(|r| r.algorithm == alg && r.level.map(f64::to_bits) == level).collect();
            let count = group.len();
            let failures = group.iter().filter(|r| r.error.is_some()).count();
            let certify = group.iter().any(|r| r.verdict.is_some());
            let mut values: Vec<f64> = group
                .iter()
                .filter_map(|r| if certify { r.a0_lower } else { r.relative_error })
                .filter(|v| v.is_finite())
                .collect();
            values.sort_by(f64::total_cmp);
            let stats = |f: &dyn Fn(&[f64]) -> f64| (!values.is_empty()).then(|| f(&values));
            let successes = group
                .iter()
                .filter(|r| {
                    if certify {
                        r.verdict == Some(Verdict::Retrievable)
                    } else {
                        r.relative_error.is_some_and(|e| e <= threshold)
                    }
                })
                .count();
            let mean_of = |vals: Vec<f64>| (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
            Aggregate {
                algorithm: alg,
                level: level.map(f64::from_bits),
                count,
                failures,
                mean: stats(&|v| v.iter().sum::<f64>() / v.len() as f64),
                median: stats(&|v| quantile(v, 0.5)),
                q05: stats(&|v| quantile(v, 0.05)),
                q95: stats(&|v| quantile(v, 0.95)),
                success_rate: successes as f64 / count as f64,
                mean_iterations: mean_of(group.iter().filter_map(|r| r.iterations.map(|i| i as f64)).collect()),
                mse: mean_of(group.iter().filter_map(|r| r.squared_error).collect()),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

fn base_frame(spec: &FrameSpec) -> Result<Frame> {
    match spec {
        FrameSpec::Inline(file) => file.clone().into_frame(),
        FrameSpec::File { path } => Frame::load(path),
        FrameSpec::Ensemble { n, m, ensemble, seed, .. } => Frame::random(*n, *m, *ensemble, *seed),
    }
}

fn trial_frame(spec: &FrameSpec, base: &Frame, trial_seed: u64) -> Result<Frame> {
    match spec {
        FrameSpec::Ensemble { n, m, ensemble, per_trial: true, .. } => {
            Frame::random(*n, *m, *ensemble, rng::derive_seed(trial_seed, 0))
        }
        _ => Ok(base.clone()),
    }
}

fn draw_signal(frame: &Frame, seed: u64) -> CVec {
    let mut r = rng::rng(seed);
    if frame.is_real() {
        rng::real_gaussian_vec(&mut r, frame.n())
    } else {
        rng::complex_gaussian_vec(&mut r, frame.n())
    }
}

pub fn run_algorithm(alg: Algorithm, frame: &Frame, y: &[f64], opts: &SolverOptions) -> Result<ReconResult> {
    match alg {
        Algorithm::Lifted => recon::lifted_linear(frame, y),
        Algorithm::PhaseLift => recon::phaselift(frame, y, &opts.phaselift),
        Algorithm::GerchbergSaxton => {
            let init = recon::spectral_init(frame, y, ScaleMode::Wirtinger, 0.0)?;
            recon::gerchberg_saxton(frame, y, &init.x0, &opts.gs)
        }
        Algorithm::WirtingerFlow => recon::wirtinger_flow(frame, y, &opts.wf),
        Algorithm::Irls => recon::irls(frame, y, &opts.irls),
    }
}

fn fill_recon(rec: &mut TrialRecord, out: Result<ReconResult>, x: &CVec) {
    let metrics = out.and_then(|r| {
        let d2 = nat_dist(&r.x_hat, x, Norm::Two)?;
        let d1 = mat_dist(&r.x_hat, x, Norm::One)?;
        let (_, anchored) = align_phase(&r.x_hat, x);
        Ok((r, d2, d1, anchored))
    });
    match metrics {
        Ok((r, d2, d1, anchored)) => {
            rec.d2_error = Some(d2);
            rec.relative_error = Some(d2 / x.norm());
            rec.d1_error = Some(d1);
            rec.squared_error = Some(anchored * anchored);
            rec.residual = Some(r.residual);
            rec.iterations = Some(r.iterations);
            rec.converged = Some(r.converged);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
}

fn measurements(frame: &Frame, x: &CVec, noise: Option<NoiseModel>) -> Result<Vec<f64>> {
    match noise {
        Some(model) => Ok(estimation::simulate_measurements(frame, x, &model)?.values),
        None => Ok(frame.beta(x)?.values),
    }
}

fn certify_frame(frame: &Frame, net: &NetOptions) -> Result<injectivity::PRCertificate> {
    if frame.is_real() {
        injectivity::pr_check_real(frame)
    } else {
        injectivity::pr_certify_complex_with(frame, net)
    }
}

fn bounds_summary(frame: &Frame, cfg: &ExperimentConfig, seed: u64) -> Result<(BoundsSummary, Option<f64>)> {
    let cert = certify_frame(frame, &cfg.net)?;
    let report = if frame.is_real() {
        injectivity::global_bounds_real(frame, seed)?
    } else {
        injectivity::empirical_global_bounds(frame, cfg.bounds_samples, seed)?
    }
    .with_certificate(&cert);
    Ok((
        BoundsSummary {
            big_a0: report.big_a0,
            big_b0: report.big_b0,
            a0: report.a0,
            b0: report.b0,
            certified: report.certified,
        },
        cert.a0_lower,
    ))
}

/// Everything one trial produces: records for every algorithm and level.
fn run_trial(cfg: &ExperimentConfig, base: &Frame, trial: usize) -> Vec<TrialRecord> {
    let seed = rng::derive_seed(cfg.seed, trial as u64);
    let frame = match trial_frame(&cfg.frame, base, seed) {
        Ok(f) => f,
        Err(e) => {
            let mut rec = TrialRecord::new(trial, seed);
            rec.error = Some(e.to_string());
            return vec![rec];
        }
    };
    let noise_seed = |stream: u64| rng::derive_seed(rng::derive_seed(seed, 2), stream ^ cfg.noise.map_or(0, |n| n.seed));
    match cfg.task {
        Task::Certify => {
            let mut rec = TrialRecord::new(trial, seed);
            match certify_frame(&frame, &cfg.net) {
                Ok(c) => {
                    rec.verdict = Some(c.verdict);
                    rec.a0_lower = c.a0_lower;
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
            vec![rec]
        }
        Task::Bounds => {
            let mut rec = TrialRecord::new(trial, seed);
            match bounds_summary(&frame, cfg, rng::derive_seed(seed, 3)) {
                Ok((b, a0)) => {
                    rec.bounds = Some(b);
                    rec.a0_lower = a0;
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
            vec![rec]
        }
        Task::Reconstruct => {
            let x = draw_signal(&frame, rng::derive_seed(seed, 1));
            let noise = cfg.noise.map(|n| NoiseModel { seed: noise_seed(0), ..n });
            let y = measurements(&frame, &x, noise);
            cfg.algorithms
                .iter()
                .map(|&alg| {
                    let mut rec = TrialRecord::new(trial, seed);
                    rec.algorithm = Some(alg);
                    rec.level = noise.map(|n| n.level());
                    match &y {
                        Ok(y) => fill_recon(&mut rec, run_algorithm(alg, &frame, y, &cfg.options), &x),
                        Err(e) => rec.error = Some(e.to_string()),
                    }
                    rec
                })
                .collect()
        }
        Task::Sweep | Task::Crlb => {
            // the CRLB curve keeps the signal fixed so that the bound is one number per level
            let x = match cfg.task {
                Task::Crlb => draw_signal(&frame, rng::derive_seed(cfg.seed, u64::MAX)),
                _ => draw_signal(&frame, rng::derive_seed(seed, 1)),
            };
            let mut out = Vec::new();
            for (li, &level) in cfg.levels.iter().enumerate() {
                let y = measurements(&frame, &x, Some(cfg.noise_at(level, noise_seed(li as u64))));
                for &alg in &cfg.algorithms {
                    let mut rec = TrialRecord::new(trial, seed);
                    rec.algorithm = Some(alg);
                    rec.level = Some(level);
                    match &y {
                        Ok(y) => fill_recon(&mut rec, run_algorithm(alg, &frame, y, &cfg.options), &x),
                        Err(e) => rec.error = Some(e.to_string()),
                    }
                    out.push(rec);
                }
            }
            out
        }
    }
}

/// Trace of the anchored Cramer-Rao bound at `x` for each level, with
/// `z0 = x`.
fn crlb_traces(cfg: &ExperimentConfig, frame: &Frame) -> Result<Vec<f64>> {
    let x = draw_signal(frame, rng::derive_seed(cfg.seed, u64::MAX));
    cfg.levels
        .iter()
        .map(|&level| {
            let fisher = match cfg.noise.map(|n| n.kind).unwrap_or(NoiseKind::Awgn) {
                NoiseKind::Awgn => estimation::fisher_awgn(frame, &x, level)?,
                NoiseKind::NonAwgn => estimation::fisher_nonawgn(frame, &x, level)?,
            };
            Ok(estimation::crlb(&fisher, &x)?.trace())
        })
        .collect()
}

/// Table of `trace(CRLB)` against the Monte-Carlo MSE of each configured
/// estimator, with phase anchored at the true signal.
pub fn crlb_reference_curve(cfg: &ExperimentConfig) -> Result<Vec<CrlbRow>> {
    let mut cfg = cfg.clone();
    cfg.task = Task::Crlb;
    cfg.output = None;
    Ok(run_experiment(&cfg)?.crlb.unwrap_or_default())
}

fn crlb_rows(cfg: &ExperimentConfig, frame: &Frame, aggregates: &[Aggregate]) -> Result<Vec<CrlbRow>> {
    let traces = crlb_traces(cfg, frame)?;
    Ok(cfg
        .levels
        .iter()
        .zip(traces)
        .map(|(&level, trace_crlb)| {
            let mse = cfg
                .algorithms
                .iter()
                .filter_map(|alg| {
                    aggregates
                        .iter()
                        .find(|a| a.algorithm == Some(*alg) && a.level == Some(level))
                        .and_then(|a| a.mse)
                        .map(|m| (alg.name().to_string(), m))
                })
                .collect();
            CrlbRow { level, trace_crlb, mse, trials: cfg.trials }
        })
        .collect())
}

/// Runs the configured task. Trials are independent and seeded by
/// `derive_seed(seed, trial)`; component failures are recorded in the
/// trial's record. The report is written to `output` when set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    let base = base_frame(&cfg.frame)?;

    let timed = |trial: usize| {
        let t = Instant::now();
        let recs = run_trial(cfg, &base, trial);
        (recs, t.elapsed().as_secs_f64())
    };
    let results: Vec<(Vec<TrialRecord>, f64)> = if cfg.threads == 1 {
        (0..cfg.trials).map(timed).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(|| (0..cfg.trials).into_par_iter().map(timed).collect())
    };

    let mut records = Vec::new();
    let mut trial_seconds = Vec::with_capacity(results.len());
    for (recs, secs) in results {
        records.extend(recs);
        trial_seconds.push(secs);
    }
    // group by level and algorithm rather than by trial
    if matches!(cfg.task, Task::Sweep | Task::Crlb) {
        let pos = |r: &TrialRecord| {
            let li = cfg.levels.iter().position(|l| Some(*l) == r.level).unwrap_or(0);
            let ai = cfg.algorithms.iter().position(|a| Some(*a) == r.algorithm).unwrap_or(0);
            (li, ai, r.trial)
        };
        records.sort_by_key(pos);
    }
    let aggregates = aggregate(&records, cfg.success_threshold);
    let crlb = match cfg.task {
        Task::Crlb => Some(crlb_rows(cfg, &base, &aggregates)?),
        _ => None,
    };
    let report = Report {
        schema: SCHEMA.into(),
        version: VERSION.into(),
        config: cfg.clone(),
        records,
        aggregates,
        crlb,
        timing: Timing { timestamp, total_seconds: start.elapsed().as_secs_f64(), trial_seconds },
    };
    if let Some(out) = &cfg.output {
        let text = match out.format {
            OutputFormat::Json => report.to_json(),
            OutputFormat::Csv => report.table_csv()?,
        };
        std::fs::write(&out.path, text)?;
    }
    Ok(report)
}
