//! Gaussian-means experiments.
//!
//! Each hypothesis is non-null with probability `π_A`; its statistic is
//! `Z ~ N(μ, 1)` with `μ = μ_N ≤ 0` under the null and `μ = μ_A > 0` otherwise,
//! and the one-sided p-value is `Φ(−Z)`. A negative `μ_N` makes nulls
//! conservative.
//!
//! Trial `i` of an experiment draws everything from its own ChaCha8 stream
//! (`seed`, stream `i`), so results do not depend on how trials are spread
//! over threads, and extending a run with more trials leaves earlier trials
//! untouched. All methods in one experiment see the same streams.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Geometric;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::async_alg::AsyncAddis;
use crate::error::{invalid, FdrError, Result};
use crate::gamma::GammaSequence;
use crate::normal::{cdf_unchecked, quantile_unchecked};
use crate::offline::{run_batch, BatchMethod};
use crate::online::{AlgorithmKind, OnlineAlgorithm};
use crate::types::{AlgorithmConfig, DecisionRecord, GammaSpec, PValueRecord, StreamTruth};

/// Seed used whenever none is given.
pub const DEFAULT_SEED: u64 = 2019;

/// `{0.01, …, 0.09} ∪ {0.1, …, 0.9}`.
pub fn figure_pi_grid() -> Vec<f64> {
    let fine = (1..=9).map(|k| k as f64 / 100.0);
    let coarse = (1..=9).map(|k| k as f64 / 10.0);
    fine.chain(coarse).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianModelConfig {
    /// Stream length.
    pub m: usize,
    pub pi_a: f64,
    pub mu_n: f64,
    pub mu_a: f64,
    pub seed: u64,
}

impl GaussianModelConfig {
    pub fn new(m: usize, pi_a: f64, mu_n: f64, mu_a: f64, seed: u64) -> Result<Self> {
        let cfg = Self { m, pi_a, mu_n, mu_a, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(invalid("stream length M must be positive"));
        }
        if !(0.0..=1.0).contains(&self.pi_a) {
            return Err(invalid(format!("pi_A must lie in [0, 1], got {}", self.pi_a)));
        }
        if !(self.mu_n <= 0.0 && self.mu_n.is_finite()) {
            return Err(invalid(format!("mu_N must be finite and ≤ 0, got {}", self.mu_n)));
        }
        if !(self.mu_a > 0.0 && self.mu_a.is_finite()) {
            return Err(invalid(format!("mu_A must be finite and > 0, got {}", self.mu_a)));
        }
        Ok(())
    }
}

/// Generator for trial `trial` of an experiment seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// One sampled stream: p-values and null flags, both indexed from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledStream {
    pub pvalues: Vec<f64>,
    pub is_null: Vec<bool>,
}

impl SampledStream {
    pub fn truth(&self) -> StreamTruth {
        StreamTruth::from_flags(&self.is_null)
    }

    pub fn records(&self) -> Vec<PValueRecord> {
        self.pvalues
            .iter()
            .zip(&self.is_null)
            .enumerate()
            .map(|(i, (&p, &null))| PValueRecord { index: i + 1, p, finish_time: None, is_null: Some(null) })
            .collect()
    }
}

/// Draws `M` hypotheses from `rng`: a uniform for the null/non-null label, then one for `Z`.
pub fn sample_stream_with<R: Rng>(config: &GaussianModelConfig, rng: &mut R) -> SampledStream {
    let mut pvalues = Vec::with_capacity(config.m);
    let mut is_null = Vec::with_capacity(config.m);
    for _ in 0..config.m {
        let null = rng.random::<f64>() >= config.pi_a;
        let u: f64 = rng.sample(Open01);
        let mu = if null { config.mu_n } else { config.mu_a };
        let z = mu + quantile_unchecked(u);
        pvalues.push(cdf_unchecked(-z));
        is_null.push(null);
    }
    SampledStream { pvalues, is_null }
}

/// The stream of trial 0 for `config`, as records plus ground truth.
pub fn sample_gaussian_stream(config: &GaussianModelConfig) -> Result<(Vec<PValueRecord>, StreamTruth)> {
    config.validate()?;
    let stream = sample_stream_with(config, &mut trial_rng(config.seed, 0));
    Ok((stream.records(), stream.truth()))
}

/// Finish times `E_j = j − 1 + G_j`, `G_j` geometric on `{1, 2, …}` with success probability 1/2.
pub fn sample_schedule_with<R: Rng>(m: usize, rng: &mut R) -> Vec<usize> {
    let geom = Geometric::new(0.5).expect("valid success probability");
    (1..=m).map(|j| j + rng.sample(geom) as usize).collect()
}

pub fn sample_async_schedule(m: usize, seed: u64) -> Result<Vec<usize>> {
    if m == 0 {
        return Err(invalid("schedule length must be positive"));
    }
    Ok(sample_schedule_with(m, &mut trial_rng(seed, 0)))
}

/// What an experiment runs on each stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Online(AlgorithmKind),
    AsyncAddis,
    Batch(BatchMethod),
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::Online(AlgorithmKind::Addis),
        Method::Online(AlgorithmKind::AddisDiscardForm),
        Method::Online(AlgorithmKind::DLord),
        Method::Online(AlgorithmKind::Saffron),
        Method::Online(AlgorithmKind::LordPlusPlus),
        Method::Online(AlgorithmKind::Lond),
        Method::Online(AlgorithmKind::AlphaInvesting),
        Method::AsyncAddis,
        Method::Batch(BatchMethod::Bh),
        Method::Batch(BatchMethod::StoreyBh),
        Method::Batch(BatchMethod::DStBh),
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Online(kind) => kind.name(),
            Method::AsyncAddis => "addis-async",
            Method::Batch(BatchMethod::Bh) => "bh",
            Method::Batch(BatchMethod::StoreyBh) => "storey-bh",
            Method::Batch(BatchMethod::DStBh) => "d-stbh",
        }
    }

    pub fn default_config(&self) -> AlgorithmConfig {
        match self {
            Method::Online(kind) => kind.default_config(),
            Method::AsyncAddis | Method::Batch(BatchMethod::Bh) | Method::Batch(BatchMethod::DStBh) => {
                AlgorithmConfig::addis_default()
            }
            Method::Batch(BatchMethod::StoreyBh) => AlgorithmConfig::saffron_default(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = FdrError;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if matches!(lower.as_str(), "addis-async" | "addis_async" | "async") {
            return Ok(Method::AsyncAddis);
        }
        if let Ok(kind) = lower.parse::<AlgorithmKind>() {
            return Ok(Method::Online(kind));
        }
        if let Ok(batch) = lower.parse::<BatchMethod>() {
            return Ok(Method::Batch(batch));
        }
        let names: Vec<&str> = Method::ALL.iter().map(Method::name).collect();
        Err(invalid(format!("unknown algorithm '{s}', expected one of: {}", names.join(", "))))
    }
}

/// A method with its parameters and the label used in reports.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub label: String,
    pub method: Method,
    pub config: AlgorithmConfig,
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        Self { label: method.name().to_string(), method, config: method.default_config() }
    }

    pub fn with_config(method: Method, config: AlgorithmConfig) -> Self {
        Self { label: method.name().to_string(), method, config }
    }

    pub fn labelled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()
    }
}

/// The five online procedures compared in the main power figure.
pub fn figure_methods() -> Vec<MethodSpec> {
    [
        AlgorithmKind::Addis,
        AlgorithmKind::Saffron,
        AlgorithmKind::LordPlusPlus,
        AlgorithmKind::Lond,
        AlgorithmKind::AlphaInvesting,
    ]
    .into_iter()
    .map(|k| MethodSpec::new(Method::Online(k)))
    .collect()
}

/// Per-trial metrics. `power` is absent when the stream has no non-nulls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMetrics {
    pub fdp: f64,
    pub power: Option<f64>,
    pub rejections: usize,
    pub false_rejections: usize,
}

impl TrialMetrics {
    /// `rejected[i]` and `is_null[i]` describe hypothesis `i + 1`.
    pub fn from_rejections(rejected: &[bool], is_null: &[bool]) -> Result<Self> {
        if rejected.len() != is_null.len() {
            return Err(invalid(format!(
                "decisions cover {} hypotheses but the truth covers {}",
                rejected.len(),
                is_null.len()
            )));
        }
        let mut rejections = 0;
        let mut false_rejections = 0;
        let mut true_rejections = 0;
        for (&r, &null) in rejected.iter().zip(is_null) {
            rejections += usize::from(r);
            false_rejections += usize::from(r && null);
            true_rejections += usize::from(r && !null);
        }
        let nonnulls = is_null.iter().filter(|&&n| !n).count();
        Ok(Self {
            fdp: false_rejections as f64 / rejections.max(1) as f64,
            power: (nonnulls > 0).then(|| true_rejections as f64 / nonnulls as f64),
            rejections,
            false_rejections,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub metrics: TrialMetrics,
    pub log: Vec<DecisionRecord>,
}

/// Runs a fresh online procedure over a stream, checking its estimator bound after every step.
pub fn run_trial(alg: &mut OnlineAlgorithm, pvalues: &[f64], truth: &StreamTruth) -> Result<TrialResult> {
    if pvalues.len() != truth.len() {
        return Err(invalid(format!("stream has {} p-values but truth has {}", pvalues.len(), truth.len())));
    }
    if !alg.log().is_empty() {
        return Err(FdrError::State("run_trial needs a fresh procedure".into()));
    }
    for &p in pvalues {
        alg.observe(p)?;
        alg.check_invariant()?;
    }
    let rejected: Vec<bool> = alg.log().iter().map(|r| r.rejected).collect();
    let is_null: Vec<bool> = (1..=truth.len()).map(|i| truth.is_null(i)).collect();
    let metrics = TrialMetrics::from_rejections(&rejected, &is_null)?;
    Ok(TrialResult { metrics, log: alg.log().to_vec() })
}

/// Runs an async ADDIS* schedule, checking `FDP-hat_async ≤ α` at every start.
pub fn run_async_trial(alg: &mut AsyncAddis, pvalues: &[f64], finish: &[usize]) -> Result<Vec<DecisionRecord>> {
    if alg.started() != 0 {
        return Err(FdrError::State("run_async_trial needs a fresh procedure".into()));
    }
    let m = pvalues.len();
    let mut by_time: Vec<Vec<usize>> = vec![Vec::new(); m + 1];
    let mut late = Vec::new();
    for (i, &e) in finish.iter().enumerate() {
        match e {
            e if e < i + 1 => return Err(invalid(format!("test {} cannot finish at {e}, before it starts", i + 1))),
            e if e <= m => by_time[e].push(i + 1),
            e => late.push((e, i + 1)),
        }
    }
    let alpha = alg.config().alpha;
    for (t, finishing) in by_time.iter().enumerate().skip(1) {
        alg.start_test(t)?;
        let estimate = alg.current_fdp_hat();
        if estimate > alpha {
            return Err(FdrError::Invariant { step: t, estimate, alpha });
        }
        for &i in finishing {
            alg.finish_test(i, pvalues[i - 1], t)?;
        }
    }
    late.sort_unstable();
    for (e, i) in late {
        alg.finish_test(i, pvalues[i - 1], e)?;
    }
    Ok(alg.decisions())
}

/// A spec with its gamma sequence built once.
struct Prepared<'a> {
    spec: &'a MethodSpec,
    gamma: GammaSequence,
}

fn prepare(methods: &[MethodSpec]) -> Result<Vec<Prepared<'_>>> {
    let mut built: Vec<(GammaSpec, GammaSequence)> = Vec::new();
    methods
        .iter()
        .map(|spec| {
            spec.validate()?;
            let gamma = match built.iter().find(|(g, _)| *g == spec.config.gamma) {
                Some((_, seq)) => seq.clone(),
                None => {
                    let seq = GammaSequence::from_spec(spec.config.gamma)?;
                    built.push((spec.config.gamma, seq.clone()));
                    seq
                }
            };
            Ok(Prepared { spec, gamma })
        })
        .collect()
}

fn run_method(prep: &Prepared<'_>, stream: &SampledStream, schedule: Option<&[usize]>) -> Result<TrialMetrics> {
    let cfg = prep.spec.config;
    let rejected: Vec<bool> = match prep.spec.method {
        Method::Online(kind) => {
            let mut alg = OnlineAlgorithm::with_gamma(kind, cfg, prep.gamma.clone())?;
            for &p in &stream.pvalues {
                alg.observe(p)?;
                alg.check_invariant()?;
            }
            alg.log().iter().map(|r| r.rejected).collect()
        }
        Method::AsyncAddis => {
            let mut alg = AsyncAddis::with_gamma(cfg, prep.gamma.clone());
            let schedule = schedule.expect("schedule drawn for async methods");
            run_async_trial(&mut alg, &stream.pvalues, schedule)?.iter().map(|r| r.rejected).collect()
        }
        Method::Batch(batch) => {
            let result = run_batch(batch, &stream.pvalues, cfg.alpha, cfg.lambda, cfg.tau)?;
            let mut flags = vec![false; stream.pvalues.len()];
            for i in result.rejected {
                flags[i - 1] = true;
            }
            flags
        }
    };
    TrialMetrics::from_rejections(&rejected, &stream.is_null)
}

fn one_trial(model: &GaussianModelConfig, prepared: &[Prepared<'_>], trial: u64) -> Result<Vec<TrialMetrics>> {
    let mut rng = trial_rng(model.seed, trial);
    let stream = sample_stream_with(model, &mut rng);
    let needs_schedule = prepared.iter().any(|p| p.spec.method == Method::AsyncAddis);
    let schedule = needs_schedule.then(|| sample_schedule_with(model.m, &mut rng));
    prepared.iter().map(|p| run_method(p, &stream, schedule.as_deref())).collect()
}

/// Per-trial metrics for trials `0..n_trials`; entry `[i][k]` is trial `i`, method `k`.
pub fn run_trials(
    model: &GaussianModelConfig,
    methods: &[MethodSpec],
    n_trials: usize,
) -> Result<Vec<Vec<TrialMetrics>>> {
    model.validate()?;
    let prepared = prepare(methods)?;
    (0..n_trials as u64).into_par_iter().map(|trial| one_trial(model, &prepared, trial)).collect()
}

/// Sample mean with its Monte-Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Number of trials that contributed.
    pub count: usize,
}

impl MeanEstimate {
    pub fn from_samples(values: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, stderr: f64::NAN, count: 0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, count: n }
    }

    /// `mean ≤ bound + k·stderr`.
    pub fn within(&self, bound: f64, k: f64) -> bool {
        self.mean <= bound + k * self.stderr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointReport {
    pub label: String,
    pub pi_a: f64,
    pub mu_n: f64,
    pub mu_a: f64,
    pub fdr: MeanEstimate,
    /// Averaged over trials with at least one non-null.
    pub power: MeanEstimate,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub points: Vec<PointReport>,
    /// Wall-clock time; not part of any output file.
    pub runtime: Duration,
}

impl ExperimentReport {
    pub fn find(&self, label: &str, pi_a: f64, mu_n: f64, mu_a: f64) -> Option<&PointReport> {
        self.points.iter().find(|p| p.label == label && p.pi_a == pi_a && p.mu_n == mu_n && p.mu_a == mu_a)
    }

    /// Long-format CSV `algorithm,pi_A,mu_N,mu_A,metric,value,stderr`, after a `# fdrlab-v1` line.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        writeln!(out, "{}", crate::cli::FORMAT_TAG).map_err(io_error)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["algorithm", "pi_A", "mu_N", "mu_A", "metric", "value", "stderr"]).map_err(csv_error)?;
        for p in &self.points {
            for (metric, est) in [("fdr", p.fdr), ("power", p.power)] {
                w.write_record([
                    p.label.clone(),
                    p.pi_a.to_string(),
                    p.mu_n.to_string(),
                    p.mu_a.to_string(),
                    metric.to_string(),
                    est.mean.to_string(),
                    est.stderr.to_string(),
                ])
                .map_err(csv_error)?;
            }
        }
        w.flush().map_err(io_error)?;
        Ok(())
    }
}

pub(crate) fn io_error(e: std::io::Error) -> FdrError {
    FdrError::Io(e.to_string())
}

pub(crate) fn csv_error(e: csv::Error) -> FdrError {
    FdrError::Io(e.to_string())
}

fn summarize(model: &GaussianModelConfig, methods: &[MethodSpec], trials: &[Vec<TrialMetrics>]) -> Vec<PointReport> {
    methods
        .iter()
        .enumerate()
        .map(|(k, spec)| PointReport {
            label: spec.label.clone(),
            pi_a: model.pi_a,
            mu_n: model.mu_n,
            mu_a: model.mu_a,
            fdr: MeanEstimate::from_samples(trials.iter().map(|t| t[k].fdp)),
            power: MeanEstimate::from_samples(trials.iter().filter_map(|t| t[k].power)),
            trials: trials.len(),
        })
        .collect()
}

/// Empirical FDR and power of every method at one model point.
pub fn estimate_metrics(
    model: &GaussianModelConfig,
    methods: &[MethodSpec],
    n_trials: usize,
) -> Result<ExperimentReport> {
    if n_trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let start = Instant::now();
    let trials = run_trials(model, methods, n_trials)?;
    Ok(ExperimentReport { points: summarize(model, methods, &trials), runtime: start.elapsed() })
}

/// A grid of model points sharing stream length, seed, trial count and methods.
#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub m: usize,
    pub mu_n: Vec<f64>,
    pub mu_a: Vec<f64>,
    pub pi_a: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<MethodSpec>,
}

impl Campaign {
    /// Model points in output order: `μ_N`, then `μ_A`, then `π_A`.
    pub fn points(&self) -> Result<Vec<GaussianModelConfig>> {
        let mut out = Vec::new();
        for &mu_n in &self.mu_n {
            for &mu_a in &self.mu_a {
                for &pi_a in &self.pi_a {
                    out.push(GaussianModelConfig::new(self.m, pi_a, mu_n, mu_a, self.seed)?);
                }
            }
        }
        Ok(out)
    }

    /// Runs every point; `progress(done, total)` is called after each one.
    pub fn run(&self, mut progress: impl FnMut(usize, usize)) -> Result<ExperimentReport> {
        if self.trials == 0 {
            return Err(invalid("need at least one trial"));
        }
        if self.methods.is_empty() {
            return Err(invalid("no algorithms to run"));
        }
        let start = Instant::now();
        let points = self.points()?;
        let mut rows = Vec::new();
        for (i, model) in points.iter().enumerate() {
            let trials = run_trials(model, &self.methods, self.trials)?;
            rows.extend(summarize(model, &self.methods, &trials));
            progress(i + 1, points.len());
        }
        Ok(ExperimentReport { points: rows, runtime: start.elapsed() })
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AlgorithmEntry {
    Name(String),
    Detailed {
        name: String,
        label: Option<String>,
        alpha: Option<f64>,
        w0: Option<f64>,
        lambda: Option<f64>,
        tau: Option<f64>,
        gamma: Option<String>,
    },
}

/// JSON experiment description.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "M", alias = "m")]
    m: usize,
    #[serde(rename = "pi_A", alias = "pi_a", default)]
    pi_a: Option<OneOrMany>,
    #[serde(rename = "mu_N", alias = "mu_n")]
    mu_n: OneOrMany,
    #[serde(rename = "mu_A", alias = "mu_a")]
    mu_a: OneOrMany,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    trials: Option<usize>,
    /// Overrides `alpha` of every algorithm that does not set its own.
    #[serde(default)]
    alpha: Option<f64>,
    algorithms: Vec<AlgorithmEntry>,
    #[serde(default)]
    #[allow(dead_code)]
    description: Option<String>,
}

/// Trials used when neither the file nor the caller says otherwise.
pub const DEFAULT_TRIALS: usize = 200;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid(format!("bad experiment config: {e}")))
    }

    /// Resolves names and defaults; `trials` and `seed` override the file when given.
    pub fn into_campaign(self, trials: Option<usize>, seed: Option<u64>) -> Result<Campaign> {
        let mut methods = Vec::with_capacity(self.algorithms.len());
        for entry in self.algorithms {
            let spec = match entry {
                AlgorithmEntry::Name(name) => {
                    let mut spec = MethodSpec::new(name.parse()?);
                    if let Some(a) = self.alpha {
                        spec.config.alpha = a;
                        spec.config.w0 = a / 2.0;
                    }
                    spec
                }
                AlgorithmEntry::Detailed { name, label, alpha, w0, lambda, tau, gamma } => {
                    let method: Method = name.parse()?;
                    let mut cfg = method.default_config();
                    if let Some(a) = alpha.or(self.alpha) {
                        cfg.alpha = a;
                        cfg.w0 = a / 2.0;
                    }
                    if let Some(v) = w0 {
                        cfg.w0 = v;
                    }
                    if let Some(v) = lambda {
                        cfg.lambda = v;
                    }
                    if let Some(v) = tau {
                        cfg.tau = v;
                    }
                    if let Some(g) = gamma {
                        cfg.gamma = g.parse()?;
                    }
                    let spec = MethodSpec::with_config(method, cfg);
                    match label {
                        Some(l) => spec.labelled(l),
                        None => spec,
                    }
                }
            };
            spec.validate()?;
            methods.push(spec);
        }
        let trials = trials.or(self.trials).unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            return Err(invalid("trials must be positive"));
        }
        Ok(Campaign {
            m: self.m,
            mu_n: self.mu_n.into_vec(),
            mu_a: self.mu_a.into_vec(),
            pi_a: self.pi_a.map_or_else(figure_pi_grid, OneOrMany::into_vec),
            trials,
            seed: seed.or(self.seed).unwrap_or(DEFAULT_SEED),
            methods,
        })
    }
}

/// When a stopping-time experiment stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoppingRule {
    AtHorizon,
    /// Stop right after the `k`-th rejection, or at `M`.
    AtRejection(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MfdrEstimate {
    /// `E|H_0 ∩ R(T)| / E(|R(T)| ∨ 1)`.
    pub mfdr: f64,
    /// Delta-method standard error of the ratio.
    pub stderr: f64,
    pub mean_false: f64,
    pub mean_rejections: f64,
    pub trials: usize,
}

impl MfdrEstimate {
    pub fn within(&self, bound: f64, k: f64) -> bool {
        self.mfdr <= bound + k * self.stderr
    }
}

/// Runs an online procedure until `rule` fires on each trial and estimates `mFDR(T_stop)`.
pub fn run_stopping_time_experiment(
    spec: &MethodSpec,
    model: &GaussianModelConfig,
    rule: StoppingRule,
    n_trials: usize,
) -> Result<MfdrEstimate> {
    model.validate()?;
    if n_trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let Method::Online(kind) = spec.method else {
        return Err(invalid("stopping-time experiments need an online procedure"));
    };
    let prepared = prepare(std::slice::from_ref(spec))?;
    let gamma = &prepared[0].gamma;
    let counts: Vec<(f64, f64)> = (0..n_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let stream = sample_stream_with(model, &mut trial_rng(model.seed, trial));
            let mut alg = OnlineAlgorithm::with_gamma(kind, spec.config, gamma.clone())?;
            let (mut v, mut r) = (0usize, 0usize);
            for (&p, &null) in stream.pvalues.iter().zip(&stream.is_null) {
                let d = alg.observe(p)?;
                alg.check_invariant()?;
                if d.rejected {
                    r += 1;
                    v += usize::from(null);
                    if rule == StoppingRule::AtRejection(r) {
                        break;
                    }
                }
            }
            Ok((v as f64, r.max(1) as f64))
        })
        .collect::<Result<_>>()?;
    let n = n_trials as f64;
    let mean_v = counts.iter().map(|c| c.0).sum::<f64>() / n;
    let mean_r = counts.iter().map(|c| c.1).sum::<f64>() / n;
    let ratio = mean_v / mean_r;
    let stderr = if n_trials > 1 {
        let var = counts.iter().map(|&(v, r)| (v - ratio * r).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt() / mean_r
    } else {
        0.0
    };
    Ok(MfdrEstimate { mfdr: ratio, stderr, mean_false: mean_v, mean_rejections: mean_r, trials: n_trials })
}
