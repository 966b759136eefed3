//! `lcosd`: simulate LC-OSD decoding, predict list error rates, tune the
//! constraint degree and list size, and tabulate lighter-pattern counts.
//!
//! Every subcommand also reads `--config <file>` holding `key=value` lines
//! named like the long flags; flags given on the command line win. The
//! worker count comes from `--workers`, else the `LCOSD_WORKERS` environment
//! variable, else all cores.
//!
//! Exit status: 0 on success, 2 for configuration errors, 3 for failures
//! while running.

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use lcosd::analysis::{CardinalityMethod, TimeModel};
use lcosd::decoder::Lga;
use lcosd::sim::{self, CodeSource, SimConfig, StoppingRule};
use thiserror::Error;

const WORKERS_ENV: &str = "LCOSD_WORKERS";

#[derive(Debug, Error)]
enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "lcosd", version, about = "LC-OSD simulation and performance prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo FER and average list size over an Eb/N0 grid.
    Simulate(SimulateArgs),
    /// Predicted list error rates, conditional rank and FER bound.
    Predict(PredictArgs),
    /// Minimum list size and predicted decoding time per constraint degree.
    Tune(TuneArgs),
    /// CCDF of the lighter-pattern count, exact and saddlepoint.
    CountDist(CountDistArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// key=value file with defaults for any long flag.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Write CSV here instead of standard output.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Master seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Parity-check matrix in alist format.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["n", "k"])]
    alist: Option<PathBuf>,
    /// Length of a random code.
    #[arg(long)]
    n: Option<usize>,
    /// Dimension of a random code.
    #[arg(long)]
    k: Option<usize>,
    /// Seed of the random code.
    #[arg(long, default_value_t = 1)]
    code_seed: u64,
    /// Eb/N0 grid in dB.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    ebn0: Vec<f64>,
    #[arg(long)]
    delta: usize,
    #[arg(long)]
    l_max: usize,
    #[arg(long, value_enum, default_value_t = StoppingArg::Trivial)]
    stopping: StoppingArg,
    #[arg(long, value_enum, default_value_t = LgaArg::Slva)]
    lga: LgaArg,
    #[arg(long, default_value_t = 100_000)]
    max_frames: u64,
    #[arg(long, default_value_t = 100)]
    max_errors: u64,
    /// Also report the MLD lower-bound error count.
    #[arg(long)]
    mld: bool,
    /// Report zero in the seconds column so output is reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct PredictArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    delta: usize,
    /// List sizes.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', required = true)]
    l_max: Vec<u64>,
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    ebn0: Vec<f64>,
    /// MLD error rates per grid point for the bound column.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',')]
    mld_fer: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Saddlepoint)]
    method: MethodArg,
    /// Enumeration cap for the counting method.
    #[arg(long, default_value_t = 10_000)]
    cap: u64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct TuneArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, allow_negative_numbers = true)]
    ebn0: f64,
    /// Target list error rate.
    #[arg(long)]
    target: f64,
    /// Constraint degrees to tabulate.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_values_t = [4usize, 5, 6, 7, 8, 9, 10, 11])]
    deltas: Vec<usize>,
    /// Time factors in nanoseconds.
    #[arg(long, default_value_t = 0.0816)]
    rho1: f64,
    #[arg(long, default_value_t = 26.4)]
    rho2: f64,
    #[arg(long, default_value_t = 0.728)]
    rho3: f64,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct CountDistArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    delta: usize,
    #[arg(long, allow_negative_numbers = true)]
    ebn0: f64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 10_000)]
    cap: u64,
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_values_t = [10.0, 100.0, 1000.0, 10000.0])]
    thresholds: Vec<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StoppingArg {
    Trivial,
    Dai,
    Sai,
    Ideal,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LgaArg {
    Slva,
    Tfpt,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Saddlepoint,
    Counting,
}

impl MethodArg {
    fn resolve(self, cap: u64) -> CardinalityMethod {
        match self {
            MethodArg::Saddlepoint => CardinalityMethod::Saddlepoint,
            MethodArg::Counting => CardinalityMethod::Counting { cap },
        }
    }
}

/// Turn `key=value` lines into flags. Blank lines and `#` comments are
/// skipped; `true`/`false` values toggle switches.
fn config_file_args(text: &str) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected key=value", no + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key == "config" {
            return Err(CliError::Config(format!("config line {}: nested config files are not allowed", no + 1)));
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => out.push(format!("--{key}={value}").into()),
        }
    }
    Ok(out)
}

/// Splice the contents of `--config FILE` in front of the command-line flags
/// so later (command-line) occurrences override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else if s == "--config" {
            path = args.get(i + 1).map(PathBuf::from);
        }
    }
    let Some(path) = path else { return Ok(args) };
    if args.len() < 2 {
        return Ok(args);
    }
    let text =
        std::fs::read_to_string(&path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let injected = config_file_args(&text)?;
    let mut out = args[..2].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}

fn worker_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => Some(v.trim().parse().map_err(|_| CliError::Config(format!("{WORKERS_ENV}={v} is not a count")))?),
            Err(_) => None,
        },
    };
    if n == Some(0) {
        return Err(CliError::Config("worker count must be at least 1".into()));
    }
    Ok(n)
}

fn emit(output: &Option<PathBuf>, csv: &str) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, csv).map_err(|e| runtime_err(format!("{}: {e}", path.display()))),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn check_rate(n: usize, k: usize, delta: usize) -> Result<(), CliError> {
    if k == 0 || k >= n || k + delta > n {
        return Err(CliError::Config(format!("need 0 < k < n and k + delta <= n (n={n}, k={k}, delta={delta})")));
    }
    Ok(())
}

fn run_simulate(a: SimulateArgs) -> Result<(), CliError> {
    let code = match (&a.alist, a.n, a.k) {
        (Some(p), _, _) => CodeSource::Alist(p.clone()),
        (None, Some(n), Some(k)) => CodeSource::Random { n, k, seed: a.code_seed },
        _ => return Err(CliError::Config("give either --alist or both --n and --k".into())),
    };
    let mut config = SimConfig::new(code, a.ebn0, a.delta, a.l_max);
    config.stopping = match a.stopping {
        StoppingArg::Trivial => StoppingRule::Trivial,
        StoppingArg::Dai => StoppingRule::Dai,
        StoppingArg::Sai => StoppingRule::Sai,
        StoppingArg::Ideal => StoppingRule::IdealOracle,
    };
    config.lga = match a.lga {
        LgaArg::Slva => Lga::Slva,
        LgaArg::Tfpt => Lga::Tfpt,
    };
    config.max_frames = a.max_frames;
    config.max_errors = a.max_errors;
    config.master_seed = a.common.seed;
    config.mld = a.mld;
    config.timing = !a.no_timing;

    config.validate().map_err(config_err)?;
    let code = config.code.load().map_err(config_err)?;
    if config.delta > code.n() - code.k() {
        return Err(CliError::Config(format!("delta {} exceeds n-k = {}", config.delta, code.n() - code.k())));
    }
    let records = sim::simulate_with(&code, &config).map_err(runtime_err)?;
    emit(&a.common.output, &sim::records_to_csv(&records))
}

fn run_predict(a: PredictArgs) -> Result<(), CliError> {
    check_rate(a.n, a.k, a.delta)?;
    if a.samples == 0 || a.l_max.contains(&0) {
        return Err(CliError::Config("samples and list sizes must be positive".into()));
    }
    if !a.mld_fer.is_empty() && a.mld_fer.len() != a.ebn0.len() {
        return Err(CliError::Config("--mld-fer needs one value per --ebn0 point".into()));
    }
    let rows = sim::predict(
        a.n,
        a.k,
        a.delta,
        &a.l_max,
        &a.ebn0,
        &a.mld_fer,
        a.samples,
        a.common.seed,
        a.method.resolve(a.cap),
    )
    .map_err(runtime_err)?;
    emit(&a.common.output, &sim::predict_to_csv(&rows))
}

fn run_tune(a: TuneArgs) -> Result<(), CliError> {
    for &d in &a.deltas {
        check_rate(a.n, a.k, d)?;
    }
    if !(a.target > 0.0 && a.target < 1.0) {
        return Err(CliError::Config(format!("target must lie in (0, 1), got {}", a.target)));
    }
    let model = TimeModel::new(a.rho1 * 1e-9, a.rho2 * 1e-9, a.rho3 * 1e-9).map_err(config_err)?;
    let rows =
        sim::tune(a.n, a.k, a.ebn0, a.target, &a.deltas, &model, a.samples, a.common.seed).map_err(runtime_err)?;
    emit(&a.common.output, &sim::tune_to_csv(&rows))
}

fn run_count_dist(a: CountDistArgs) -> Result<(), CliError> {
    check_rate(a.n, a.k, a.delta)?;
    if let Some(t) = a.thresholds.iter().find(|&&t| !(t.is_finite() && t >= 0.0) || t > a.cap as f64) {
        return Err(CliError::Config(format!("threshold {t} outside [0, cap = {}]", a.cap)));
    }
    let rows = sim::count_distribution(a.n, a.k, a.delta, a.ebn0, a.samples, a.common.seed, a.cap, &a.thresholds)
        .map_err(runtime_err)?;
    emit(&a.common.output, &sim::ccdf_to_csv(&rows))
}

fn run() -> Result<(), CliError> {
    let args = expand_config(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests print and exit normally; usage
            // errors exit with the configuration status.
            e.exit();
        }
    };
    let common = match &cli.command {
        Command::Simulate(a) => &a.common,
        Command::Predict(a) => &a.common,
        Command::Tune(a) => &a.common,
        Command::CountDist(a) => &a.common,
    };
    if let Some(w) = worker_count(common.workers)? {
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global().map_err(runtime_err)?;
    }
    match cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Predict(a) => run_predict(a),
        Command::Tune(a) => run_tune(a),
        Command::CountDist(a) => run_count_dist(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lcosd: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
