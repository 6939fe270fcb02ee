//! Command-line front end: argument handling, run dispatch and result files.
//!
//! Files written for a single run:
//!
//! | file             | columns                                     |
//! |------------------|---------------------------------------------|
//! | `trajectory.csv` | `n,x_m,y_m`                                 |
//! | `allocation.csv` | `n,k,b,p` (shares below 1e-7 written as 0)  |
//! | `rates.csv`      | `n,k,rate_bps_hz`                           |
//! | `summary.json`   | scalar results and the objective trace      |
//!
//! A sweep writes `sweep.csv` (`alpha,system_throughput,variance,jain,iterations,termination`)
//! plus one such file set per run in `alpha_<value>/` or `maxmin/`.
//! Floats carry 12 significant digits.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fairness::FairnessFactor;
use crate::optimizer::{alpha_sweep, run_algorithm1, run_maxmin, SolveReport, SweepEntry};
use crate::scenario::load_scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Weighted,
    Maxmin,
    Sweep,
}

#[derive(Debug, Parser)]
#[command(name = "fairtraj", version, about = "Fairness-aware UAV trajectory and resource allocation")]
pub struct Args {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Weighted)]
    pub mode: Mode,
    /// Fairness factor for weighted mode; `inf` selects the max-min solver.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Comma-separated, ascending fairness factors for sweep mode.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Vec<f64>,
    /// Append a max-min run to a sweep.
    #[arg(long)]
    pub include_maxmin: bool,
    /// Stop once the objective changes by at most this much between rounds.
    #[arg(long, default_value_t = crate::optimizer::DEFAULT_EPS)]
    pub eps: f64,
    #[arg(long, default_value_t = crate::optimizer::DEFAULT_MAX_ROUNDS)]
    pub max_iters: usize,
    #[arg(long, env = "FAIRTRAJ_OUT", default_value = "./out")]
    pub out: PathBuf,
    /// Only report errors.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunMode {
    Single(FairnessFactor),
    Sweep { alphas: Vec<f64>, include_maxmin: bool },
}

/// Validated run request.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub scenario: PathBuf,
    pub mode: RunMode,
    pub eps: f64,
    pub max_rounds: usize,
    pub out: PathBuf,
    pub quiet: bool,
}

impl RunManifest {
    pub fn from_args(args: Args) -> Result<Self> {
        let mode = match args.mode {
            Mode::Weighted => {
                if !args.alphas.is_empty() || args.include_maxmin {
                    return Err(Error::InvalidArgument(
                        "--alphas and --include-maxmin only apply to --mode sweep".into(),
                    ));
                }
                let alpha = args
                    .alpha
                    .ok_or_else(|| Error::InvalidArgument("--mode weighted requires --alpha".into()))?;
                RunMode::Single(FairnessFactor::new(alpha)?)
            }
            Mode::Maxmin => {
                if args.alpha.is_some() || !args.alphas.is_empty() || args.include_maxmin {
                    return Err(Error::InvalidArgument(
                        "--mode maxmin takes no --alpha, --alphas or --include-maxmin".into(),
                    ));
                }
                RunMode::Single(FairnessFactor::MaxMin)
            }
            Mode::Sweep => {
                if args.alpha.is_some() {
                    return Err(Error::InvalidArgument("--mode sweep takes --alphas, not --alpha".into()));
                }
                if args.alphas.is_empty() {
                    return Err(Error::InvalidArgument("--mode sweep requires --alphas".into()));
                }
                if args.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
                    return Err(Error::InvalidArgument("--alphas must be finite and >= 0".into()));
                }
                if args.alphas.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidArgument("--alphas must be strictly ascending".into()));
                }
                RunMode::Sweep {
                    alphas: args.alphas,
                    include_maxmin: args.include_maxmin,
                }
            }
        };
        if !(args.eps > 0.0 && args.eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("--eps must be positive (got {})", args.eps)));
        }
        if args.max_iters == 0 {
            return Err(Error::InvalidArgument("--max-iters must be at least 1".into()));
        }
        Ok(Self {
            scenario: args.scenario,
            mode,
            eps: args.eps,
            max_rounds: args.max_iters,
            out: args.out,
            quiet: args.quiet,
        })
    }
}

/// Process exit code for an error: 1 configuration, 2 solver, 3 I/O.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::MalformedConfig(_)
        | Error::InfeasibleEndpoints { .. }
        | Error::NonPositiveConstant { .. }
        | Error::InvalidArgument(_) => 1,
        Error::SolverFailure { .. } | Error::DegenerateAllocation { .. } => 2,
        Error::Io { .. } => 3,
    }
}

/// Parses `argv` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let quiet = args.quiet;
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if quiet {
        "error"
    } else {
        "warn"
    }))
    .try_init();

    match RunManifest::from_args(args).and_then(|m| execute(&m)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(manifest: &RunManifest) -> Result<i32> {
    let scenario = load_scenario(&manifest.scenario)?;
    match &manifest.mode {
        RunMode::Single(factor) => {
            let report = match factor {
                FairnessFactor::Finite(a) => run_algorithm1(&scenario, *a, manifest.eps, manifest.max_rounds)?,
                FairnessFactor::MaxMin => run_maxmin(&scenario, manifest.eps, manifest.max_rounds)?,
            };
            emit_report(&report, &manifest.out)?;
            if !manifest.quiet {
                println!("{}", describe(&report));
                println!("results written to {}", manifest.out.display());
            }
            Ok(0)
        }
        RunMode::Sweep { alphas, include_maxmin } => {
            let entries = alpha_sweep(&scenario, alphas, *include_maxmin, manifest.eps, manifest.max_rounds)?;
            emit_sweep(&entries, &manifest.out)?;
            let mut code = 0;
            for entry in &entries {
                match &entry.outcome {
                    Ok(report) => {
                        if !manifest.quiet {
                            println!("{}", describe(report));
                        }
                    }
                    Err(e) => {
                        eprintln!("error: alpha = {}: {e}", entry.factor);
                        code = code.max(exit_code(e));
                    }
                }
            }
            if !manifest.quiet {
                println!("results written to {}", manifest.out.display());
            }
            Ok(code)
        }
    }
}

fn describe(report: &SolveReport) -> String {
    format!(
        "alpha = {}: throughput {:.6} bps/Hz, variance {:.3e}, jain {:.4}, {} rounds ({})",
        report.factor,
        report.system_throughput,
        report.fairness.variance,
        report.fairness.jain_index,
        report.iterations,
        report.termination.as_str()
    )
}

/// `v` rounded to 12 significant digits.
fn round12(v: f64) -> f64 {
    if v.is_finite() {
        format!("{v:.11e}").parse().unwrap()
    } else {
        v
    }
}

fn fmt12(v: f64) -> String {
    format!("{v:.11e}")
}

/// Bandwidth and power shares below this are written as exactly 0.
pub const REPORT_FLOOR: f64 = 1e-7;

fn fmt_share(v: f64) -> String {
    fmt12(if v < REPORT_FLOOR { 0.0 } else { v })
}

fn alpha_value(factor: FairnessFactor) -> Value {
    match factor {
        FairnessFactor::Finite(a) => json!(round12(a)),
        FairnessFactor::MaxMin => json!("inf"),
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

fn write_csv<R>(path: &Path, header: &[&str], rows: R) -> Result<()>
where
    R: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    w.write_record(header).map_err(csv_error(path))?;
    for row in rows {
        w.write_record(&row).map_err(csv_error(path))?;
    }
    w.flush().map_err(io_error(path))
}

/// Summary document written to `summary.json`.
pub fn summary_json(report: &SolveReport) -> Value {
    json!({
        "alpha": alpha_value(report.factor),
        "system_throughput": round12(report.system_throughput),
        "per_user_throughput": report.per_user_throughput.iter().map(|&v| round12(v)).collect::<Vec<_>>(),
        "variance": round12(report.fairness.variance),
        "jain": round12(report.fairness.jain_index),
        "iterations": report.iterations,
        "termination": report.termination.as_str(),
        "condition1_held": report.condition1_held,
        "objective_trace": report.objective_trace.iter().map(|&v| round12(v)).collect::<Vec<_>>(),
    })
}

/// Writes the four result files of one run into `dir`, creating it if needed.
pub fn emit_report(report: &SolveReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let k_users = report.rates.rows();
    let n_slots = report.rates.cols();

    let trajectory = dir.join("trajectory.csv");
    write_csv(
        &trajectory,
        &["n", "x_m", "y_m"],
        report
            .trajectory
            .points()
            .iter()
            .enumerate()
            .map(|(n, q)| vec![n.to_string(), fmt12(q[0]), fmt12(q[1])]),
    )?;

    let per_entry = |f: &dyn Fn(usize, usize) -> Vec<String>| {
        (0..n_slots)
            .flat_map(move |n| (0..k_users).map(move |k| (n, k)))
            .map(|(n, k)| {
                let mut row = vec![n.to_string(), k.to_string()];
                row.extend(f(k, n));
                row
            })
            .collect::<Vec<_>>()
    };

    let allocation = dir.join("allocation.csv");
    let (b, p) = (report.allocation.bandwidth(), report.allocation.power());
    write_csv(
        &allocation,
        &["n", "k", "b", "p"],
        per_entry(&|k, n| vec![fmt_share(b[(k, n)]), fmt_share(p[(k, n)])]),
    )?;

    let rates = dir.join("rates.csv");
    write_csv(
        &rates,
        &["n", "k", "rate_bps_hz"],
        per_entry(&|k, n| vec![fmt12(report.rates[(k, n)])]),
    )?;

    let summary = dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary_json(report)).expect("summary is valid json");
    text.push('\n');
    fs::write(&summary, text).map_err(io_error(&summary))?;

    Ok(vec![trajectory, allocation, rates, summary])
}

/// Subdirectory used for one sweep entry.
pub fn sweep_dir_name(factor: FairnessFactor) -> String {
    match factor {
        FairnessFactor::Finite(a) => format!("alpha_{a}"),
        FairnessFactor::MaxMin => "maxmin".to_string(),
    }
}

/// Writes `sweep.csv` and the per-run file sets. Failed runs appear in
/// `sweep.csv` with `error` as termination and empty numeric fields.
pub fn emit_sweep(entries: &[SweepEntry], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let mut rows = Vec::with_capacity(entries.len());
    for entry in entries {
        let alpha = entry.factor.to_string();
        match &entry.outcome {
            Ok(report) => {
                emit_report(report, &dir.join(sweep_dir_name(entry.factor)))?;
                rows.push(vec![
                    alpha,
                    fmt12(report.system_throughput),
                    fmt12(report.fairness.variance),
                    fmt12(report.fairness.jain_index),
                    report.iterations.to_string(),
                    report.termination.as_str().to_string(),
                ]);
            }
            Err(_) => rows.push(vec![
                alpha,
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "error".to_string(),
            ]),
        }
    }
    write_csv(
        &dir.join("sweep.csv"),
        &["alpha", "system_throughput", "variance", "jain", "iterations", "termination"],
        rows,
    )
}
