//! Command-line front end.
//!
//! Input files are CSV with the header `index,p_value[,finish_time]`; `#`
//! lines are comments. Every file written starts with [`FORMAT_TAG`].
//! Failures print one line `error[<kind>]: <message>` to standard error and
//! exit with 2 (usage), 3 (validation) or 4 (invariant violation).

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::async_alg::AsyncAddis;
use crate::error::FdrError;
use crate::offline::{run_batch, BatchMethod};
use crate::online::{AlgorithmKind, OnlineAlgorithm};
use crate::simulation::{run_async_trial, ExperimentConfig, GaussianModelConfig, Method, DEFAULT_SEED};
use crate::tuning::{tune_surface, with_empirical_power, MixtureCdf, DEFAULT_GRID};
use crate::types::{AlgorithmConfig, DecisionRecord, GammaSpec, PValueRecord};

/// First line of every file the CLI writes.
pub const FORMAT_TAG: &str = "# fdrlab-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Validation,
    Invariant,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 2,
            ErrorKind::Validation => 3,
            ErrorKind::Invariant => 4,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            ErrorKind::Usage => "usage",
            ErrorKind::Validation => "validation",
            ErrorKind::Invariant => "invariant",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Usage, message: message.into() }
    }

    fn validation(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Validation, message: message.into() }
    }

    /// Maps a library error raised while processing data.
    fn from_data(e: FdrError) -> Self {
        match e {
            FdrError::Invariant { .. } => Self { kind: ErrorKind::Invariant, message: e.to_string() },
            other => Self::validation(other.to_string()),
        }
    }

    /// Maps a library error raised while checking flags.
    fn from_flags(e: FdrError) -> Self {
        Self::usage(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "fdrlab", version, about = "Online FDR control with adaptive discarding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test a p-value file in order and write one decision row per hypothesis.
    Stream(StreamArgs),
    /// Run BH, Storey-BH or D-StBH on a p-value file.
    Batch(BatchArgs),
    /// Run a Gaussian-means experiment described by a JSON file.
    Simulate(SimulateArgs),
    /// Evaluate the (theta, tau) tuning surface of the Gaussian mixture.
    Tune(TuneArgs),
    /// Run several procedures on one p-value file and summarize their rejections.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct ParamArgs {
    #[arg(long)]
    alpha: Option<f64>,
    /// Initial wealth; defaults to alpha / 2.
    #[arg(long)]
    w0: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// `power:<s>` or `lord`.
    #[arg(long)]
    gamma: Option<String>,
}

impl ParamArgs {
    fn resolve(&self, base: AlgorithmConfig) -> CliResult<AlgorithmConfig> {
        let mut cfg = base;
        if let Some(a) = self.alpha {
            cfg.alpha = a;
            cfg.w0 = a / 2.0;
        }
        if let Some(v) = self.w0 {
            cfg.w0 = v;
        }
        if let Some(v) = self.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = self.tau {
            cfg.tau = v;
        }
        if let Some(g) = &self.gamma {
            cfg.gamma = g.parse::<GammaSpec>().map_err(CliError::from_flags)?;
        }
        cfg.validate().map_err(CliError::from_flags)?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct StreamArgs {
    input: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long = "alg", default_value = "addis")]
    alg: String,
    #[command(flatten)]
    params: ParamArgs,
    /// Use the asynchronous ADDIS* rule with the file's finish_time column.
    #[arg(long = "async")]
    asynchronous: bool,
    /// Fail with exit code 4 if the rule's FDP estimate ever exceeds alpha.
    #[arg(long)]
    assert_invariant: bool,
}

#[derive(Debug, Args)]
struct BatchArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "d-stbh")]
    method: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    config: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress on standard error.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[arg(long, allow_hyphen_values = true)]
    mu_null: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    mu_alt: f64,
    #[arg(long)]
    pi_alt: f64,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    /// Also estimate ADDIS* power on every grid cell.
    #[arg(long)]
    empirical: bool,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    /// Stream length for the empirical surface.
    #[arg(long, default_value_t = 1000)]
    m: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Comma-separated procedure names.
    #[arg(long, value_delimiter = ',', default_value = "addis,saffron,lordpp,dlord,lond")]
    algs: Vec<String>,
    #[arg(long)]
    alpha: Option<f64>,
}

/// Parsed input file.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueTable {
    pub records: Vec<PValueRecord>,
    pub has_finish_time: bool,
}

impl PValueTable {
    pub fn pvalues(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.p).collect()
    }
}

/// Reads `index,p_value[,finish_time]` CSV; indices must run `1, 2, …`.
pub fn read_pvalue_csv<R: Read>(input: R) -> CliResult<PValueTable> {
    let mut reader =
        csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).has_headers(false).from_reader(input);
    let mut rows = reader.records();
    let Some(header) = rows.next() else {
        return Ok(PValueTable { records: Vec::new(), has_finish_time: false });
    };
    let header = header.map_err(|e| CliError::validation(csv_message(&e)))?;
    let names: Vec<&str> = header.iter().collect();
    let has_finish_time = match names.as_slice() {
        ["index", "p_value"] => false,
        ["index", "p_value", "finish_time"] => true,
        _ => {
            let line = header.position().map_or(1, |p| p.line());
            return Err(CliError::validation(format!(
                "line {line}: expected header 'index,p_value[,finish_time]', got '{}'",
                names.join(",")
            )));
        }
    };
    let mut records = Vec::new();
    for row in rows {
        let row = row.map_err(|e| CliError::validation(csv_message(&e)))?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |what: &str, v: &str| CliError::validation(format!("line {line}: bad {what} '{v}'"));
        let index: usize = row[0].parse().map_err(|_| bad("index", &row[0]))?;
        let p: f64 = row[1].parse().map_err(|_| bad("p_value", &row[1]))?;
        let finish_time = match has_finish_time {
            true => Some(row[2].parse::<usize>().map_err(|_| bad("finish_time", &row[2]))?),
            false => None,
        };
        if index != records.len() + 1 {
            return Err(CliError::validation(format!(
                "line {line}: expected index {}, got {index}",
                records.len() + 1
            )));
        }
        let record = PValueRecord::with_finish(index, p, finish_time)
            .map_err(|e| CliError::validation(format!("line {line}: {e}")))?;
        records.push(record);
    }
    Ok(PValueTable { records, has_finish_time })
}

fn csv_message(e: &csv::Error) -> String {
    match e.position() {
        Some(p) => format!("line {}: {e}", p.line()),
        None => e.to_string(),
    }
}

fn open_input(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| CliError::validation(format!("cannot open {}: {e}", path.display())))
}

/// Buffers everything so nothing is written when a later step fails.
fn emit(output: Option<&Path>, stdout: &mut dyn Write, data: &[u8]) -> CliResult<()> {
    let result = match output {
        Some(path) => File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            w.write_all(data)?;
            w.flush()
        }),
        None => stdout.write_all(data).and_then(|_| stdout.flush()),
    };
    result.map_err(|e| CliError::validation(format!("cannot write output: {e}")))
}

fn flag(b: bool) -> u8 {
    u8::from(b)
}

/// Decision rows `index,alpha,selected,candidate,rejected`.
pub fn decisions_csv(log: &[DecisionRecord]) -> Vec<u8> {
    let mut out = format!("{FORMAT_TAG}\nindex,alpha,selected,candidate,rejected\n");
    for r in log {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.index,
            r.alpha_t,
            flag(r.selected),
            flag(r.candidate),
            flag(r.rejected)
        ));
    }
    out.into_bytes()
}

fn cmd_stream(args: &StreamArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let kind: AlgorithmKind = args.alg.parse().map_err(CliError::from_flags)?;
    let config = args.params.resolve(kind.default_config())?;
    if args.asynchronous && kind != AlgorithmKind::Addis {
        return Err(CliError::usage("--async is only available with --alg addis"));
    }
    let table = read_pvalue_csv(open_input(&args.input)?)?;
    if table.has_finish_time && !args.asynchronous {
        return Err(CliError::usage("input has a finish_time column; pass --async to use it"));
    }
    if args.asynchronous && !table.has_finish_time && !table.records.is_empty() {
        return Err(CliError::usage("--async needs a finish_time column in the input"));
    }
    let pvalues = table.pvalues();
    let log = if args.asynchronous {
        let finish: Vec<usize> = table.records.iter().map(|r| r.finish_time.unwrap_or(r.index)).collect();
        let mut alg = AsyncAddis::new(config).map_err(CliError::from_flags)?;
        run_async_checked(&mut alg, &pvalues, &finish, args.assert_invariant)?
    } else {
        let mut alg = OnlineAlgorithm::new(kind, config).map_err(CliError::from_flags)?;
        for &p in &pvalues {
            alg.observe(p).map_err(CliError::from_data)?;
            if args.assert_invariant {
                alg.check_invariant().map_err(CliError::from_data)?;
            }
        }
        alg.into_log()
    };
    emit(args.output.as_deref(), stdout, &decisions_csv(&log))
}

fn run_async_checked(
    alg: &mut AsyncAddis,
    pvalues: &[f64],
    finish: &[usize],
    check: bool,
) -> CliResult<Vec<DecisionRecord>> {
    if check {
        return run_async_trial(alg, pvalues, finish).map_err(CliError::from_data);
    }
    crate::async_alg::run_async_with(alg, pvalues, finish).map_err(CliError::from_data)?;
    Ok(alg.decisions())
}

#[derive(Debug, Serialize)]
struct BatchReport<'a> {
    method: &'a str,
    alpha: f64,
    threshold: f64,
    pi0_hat: Option<f64>,
    rejected: &'a [usize],
}

fn cmd_batch(args: &BatchArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let method: BatchMethod = args.method.parse().map_err(CliError::from_flags)?;
    let (default_lambda, default_tau) = match method {
        BatchMethod::StoreyBh => (0.5, 1.0),
        _ => (0.25, 0.5),
    };
    let lambda = args.lambda.unwrap_or(default_lambda);
    let tau = if method == BatchMethod::StoreyBh { 1.0 } else { args.tau.unwrap_or(default_tau) };
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::usage(format!("alpha must lie in (0, 1), got {}", args.alpha)));
    }
    if method != BatchMethod::Bh && !(lambda >= 0.0 && lambda < tau && tau <= 1.0) {
        return Err(CliError::usage(format!("need 0 ≤ lambda < tau ≤ 1, got lambda={lambda}, tau={tau}")));
    }
    let table = read_pvalue_csv(open_input(&args.input)?)?;
    let result = run_batch(method, &table.pvalues(), args.alpha, lambda, tau).map_err(CliError::from_data)?;
    let name = crate::simulation::Method::Batch(method).name();
    let text = if args.json {
        let report = BatchReport {
            method: name,
            alpha: args.alpha,
            threshold: result.threshold,
            pi0_hat: result.pi0_hat,
            rejected: &result.rejected,
        };
        serde_json::to_string_pretty(&report).expect("plain data serializes") + "\n"
    } else {
        let mut s = format!("{FORMAT_TAG}\nmethod: {name}\nthreshold: {}\n", result.threshold);
        if let Some(pi0) = result.pi0_hat {
            s.push_str(&format!("pi0_hat: {pi0}\n"));
        }
        let ids: Vec<String> = result.rejected.iter().map(usize::to_string).collect();
        s.push_str(&format!("rejected: {}\n", ids.join(" ")));
        s
    };
    emit(args.output.as_deref(), stdout, text.as_bytes())
}

fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    if args.trials == Some(0) {
        return Err(CliError::usage("--trials must be positive"));
    }
    let mut text = String::new();
    open_input(&args.config)?
        .read_to_string(&mut text)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", args.config.display())))?;
    let campaign = ExperimentConfig::from_json(&text).and_then(|c| c.into_campaign(args.trials, args.seed)).map_err(
        |e| match &e {
            FdrError::InvalidArgument(m) if m.contains("unknown algorithm") => CliError::usage(m.clone()),
            _ => CliError::validation(e.to_string()),
        },
    )?;
    campaign.points().map_err(CliError::from_data)?;
    let quiet = args.quiet;
    let report = campaign
        .run(|done, total| {
            if !quiet {
                let _ = writeln!(stderr, "simulate: {done}/{total} points");
            }
        })
        .map_err(CliError::from_data)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf).map_err(CliError::from_data)?;
    emit(args.output.as_deref(), stdout, &buf)
}

fn cmd_tune(args: &TuneArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    if args.grid < 2 {
        return Err(CliError::usage(format!("--grid must be at least 2, got {}", args.grid)));
    }
    let f = MixtureCdf::new(args.pi_alt, args.mu_null, args.mu_alt).map_err(CliError::from_flags)?;
    let mut surface = tune_surface(&f, args.grid).map_err(CliError::from_flags)?;
    if args.empirical {
        if args.trials == 0 {
            return Err(CliError::usage("--trials must be positive"));
        }
        let model = GaussianModelConfig::new(args.m, args.pi_alt, args.mu_null, args.mu_alt, args.seed)
            .map_err(CliError::from_flags)?;
        surface = with_empirical_power(surface, &model, &AlgorithmConfig::addis_default(), args.trials)
            .map_err(CliError::from_data)?;
    }
    let mut buf = Vec::new();
    surface.write_csv(&mut buf).map_err(CliError::from_data)?;
    emit(args.output.as_deref(), stdout, &buf)?;
    let mut summary = format!(
        "argmin theta*={} tau*={} lambda*={} g_of_F={}",
        surface.theta_star, surface.tau_star, surface.lambda_star, surface.min_value
    );
    if surface.is_flat() {
        summary.push_str(" (surface is flat)");
    }
    if let Some((at, max)) = surface.power_at_argmin_and_max() {
        summary.push_str(&format!(" power_at_argmin={at} power_max={max}"));
    }
    // the summary goes wherever the data does not
    let target: &mut dyn Write = if args.output.is_some() { stdout } else { stderr };
    writeln!(target, "{summary}").map_err(|e| CliError::validation(e.to_string()))
}

fn cmd_compare(args: &CompareArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let methods: Vec<Method> =
        args.algs.iter().map(|s| s.parse::<Method>()).collect::<Result<_, _>>().map_err(CliError::from_flags)?;
    if methods.contains(&Method::AsyncAddis) {
        return Err(CliError::usage("compare runs synchronous and batch procedures only"));
    }
    let configs: Vec<AlgorithmConfig> = methods
        .iter()
        .map(|m| {
            let mut cfg = m.default_config();
            if let Some(a) = args.alpha {
                cfg.alpha = a;
                cfg.w0 = a / 2.0;
            }
            cfg.validate().map(|_| cfg)
        })
        .collect::<Result<_, _>>()
        .map_err(CliError::from_flags)?;
    let table = read_pvalue_csv(open_input(&args.input)?)?;
    let pvalues = table.pvalues();
    let mut out = format!("{FORMAT_TAG}\nalgorithm,rejections,rejected\n");
    for (method, cfg) in methods.iter().zip(configs) {
        let rejected: Vec<usize> = match method {
            Method::Online(kind) => crate::online::run_stream(*kind, cfg, &pvalues)
                .map_err(CliError::from_data)?
                .iter()
                .filter(|r| r.rejected)
                .map(|r| r.index)
                .collect(),
            Method::Batch(b) => {
                run_batch(*b, &pvalues, cfg.alpha, cfg.lambda, cfg.tau).map_err(CliError::from_data)?.rejected
            }
            Method::AsyncAddis => unreachable!("rejected above"),
        };
        let ids: Vec<String> = rejected.iter().map(usize::to_string).collect();
        out.push_str(&format!("{},{},{}\n", method.name(), rejected.len(), ids.join(" ")));
    }
    emit(args.output.as_deref(), stdout, out.as_bytes())
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = write!(stdout, "{e}");
                return if e.kind() == K::DisplayHelpOnMissingArgumentOrSubcommand { 2 } else { 0 };
            }
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("bad arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            let _ = writeln!(stderr, "error[usage]: {first}");
            return ErrorKind::Usage.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Stream(a) => cmd_stream(a, stdout),
        Command::Batch(a) => cmd_batch(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout, stderr),
        Command::Tune(a) => cmd_tune(a, stdout, stderr),
        Command::Compare(a) => cmd_compare(a, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let message = e.message.replace('\n', " ");
            let _ = writeln!(stderr, "error[{}]: {message}", e.kind.tag());
            e.kind.exit_code()
        }
    }
}

/// Entry point used by the binary.
pub fn main_from_env() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_plain_and_async_tables() {
        let t = read_pvalue_csv("# fdrlab-v1\nindex,p_value\n1,0.01\n2,0.5\n".as_bytes()).unwrap();
        assert_eq!(t.pvalues(), vec![0.01, 0.5]);
        assert!(!t.has_finish_time);
        let t = read_pvalue_csv("index,p_value,finish_time\n1,0.2,3\n".as_bytes()).unwrap();
        assert_eq!(t.records[0].finish_time, Some(3));
        let t = read_pvalue_csv("index,p_value\n".as_bytes()).unwrap();
        assert!(t.records.is_empty());
    }

    #[test]
    fn read_errors_name_the_line() {
        let e = read_pvalue_csv("index,p_value\n1,0.1\n2,0.2\n3,1.5\n".as_bytes()).unwrap_err();
        assert_eq!(e.kind, ErrorKind::Validation);
        assert!(e.message.contains("line 4"), "{}", e.message);
        let e = read_pvalue_csv("index,p_value\n1,0.1\n3,0.2\n".as_bytes()).unwrap_err();
        assert!(e.message.contains("line 3"));
        let e = read_pvalue_csv("idx,p\n".as_bytes()).unwrap_err();
        assert!(e.message.contains("header"));
        let e = read_pvalue_csv("index,p_value\n1,abc\n".as_bytes()).unwrap_err();
        assert!(e.message.contains("line 2"));
    }

    #[test]
    fn unknown_subcommand_is_usage() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["fdrlab", "frobnicate"], &mut out, &mut err), 2);
        let msg = String::from_utf8(err).unwrap();
        assert!(msg.starts_with("error[usage]:"));
        assert_eq!(msg.lines().count(), 1);
    }
}
