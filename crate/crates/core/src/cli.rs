//! Command-line front end: `run`, `bounds` and `compare`.
//!
//! Exit codes: 0 on success (bound violations are reported as data), 1 for
//! unreadable or invalid scenarios and infeasible gains, 2 when the
//! simulation diverges.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{bound_report, compare_dithering, epsilon_delta, BoundReport, Comparison, ControlTrace, RunLog};
use crate::controller::{t2_bound, RelativeState};
use crate::engine::Simulator;
use crate::error::{Error, Result};
use crate::estimator::{baseline_signum_gain, disagreement, theoretical_bounds, tune_alpha1, EstimatorBounds, EstimatorState, TuningTarget};
use crate::scenario::{EstimatorKind, Scenario};
use crate::telemetry::{render_plots, to_csv, Table};

#[derive(Debug, Parser)]
#[command(name = "enclosing", version, about = "Finite-time enclosing of moving targets: simulate, bound, compare")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario and write telemetry, bound report and plots.
    Run(RunArgs),
    /// Print the closed-form accuracy and settling bounds as JSON.
    Bounds(BoundsArgs),
    /// Run the continuous estimator and the signum baseline side by side.
    Compare(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Override a scenario value by dotted path, e.g. `gains.k_e=12`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub no_plots: bool,
    /// Log every N-th integration step.
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Target accuracy for the exponent recommendation.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon_d: f64,
    /// Target estimator settling time (s) for the exponent recommendation.
    #[arg(long, default_value_t = 20.0)]
    pub t1_d: f64,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args).map(|outcome| {
            println!("wrote {} samples to {}", outcome.samples, args.out.display());
            if !outcome.report.violations.is_empty() {
                println!("bound violations: {}", outcome.report.violations.len());
            }
        }),
        Command::Bounds(args) => cmd_bounds(&args).map(|v| println!("{}", serde_json::to_string_pretty(&v).expect("json"))),
        Command::Compare(args) => cmd_compare(&args).map(|c| {
            println!(
                "TV ratio (continuous / signum) = {:.4e}, max jump ratio (signum / continuous) = {:.4e}",
                c.tv_ratio, c.max_jump_ratio
            )
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NumericalBlowup { .. } => 2,
        _ => 1,
    }
}

/// Loads a scenario and applies `key=value` overrides before validation.
pub fn load_with_overrides(path: &Path, overrides: &[String]) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    let raw: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    if overrides.is_empty() {
        return Scenario::from_value(raw);
    }
    // the canonical form spells out defaulted keys so they can be overridden
    let mut value = Scenario::from_value(raw.clone()).map(|s| s.to_value()).unwrap_or(raw);
    for entry in overrides {
        apply_override(&mut value, entry)?;
    }
    Scenario::from_value(value)
}

/// Sets one `key=value` pair. Keys are dotted paths (array indices allowed);
/// a bare key is accepted when it names exactly one leaf.
pub fn apply_override(value: &mut Value, entry: &str) -> Result<()> {
    let (key, raw) = entry
        .split_once('=')
        .ok_or_else(|| Error::invalid("override", format!("{entry:?} is not KEY=VALUE")))?;
    let parsed: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    let path: Vec<String> = if key.contains('.') {
        key.split('.').map(str::to_owned).collect()
    } else {
        let mut hits = Vec::new();
        find_key(value, key, &mut Vec::new(), &mut hits);
        match hits.len() {
            1 => hits.remove(0),
            0 => return Err(Error::invalid("override", format!("unknown key {key:?}"))),
            _ => return Err(Error::invalid("override", format!("ambiguous key {key:?}; use a dotted path"))),
        }
    };
    let mut slot = &mut *value;
    for segment in &path {
        slot = match slot {
            Value::Object(map) => map.get_mut(segment),
            Value::Array(items) => segment.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| Error::invalid("override", format!("unknown key {key:?}")))?;
    }
    *slot = parsed;
    Ok(())
}

fn find_key(value: &Value, key: &str, prefix: &mut Vec<String>, hits: &mut Vec<Vec<String>>) {
    if let Value::Object(map) = value {
        for (k, v) in map {
            prefix.push(k.clone());
            if k == key {
                hits.push(prefix.clone());
            } else {
                find_key(v, key, prefix, hits);
            }
            prefix.pop();
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io { path: path.to_owned(), source })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Io { path: path.to_owned(), source })
}

fn prepared(args: &RunArgs) -> Result<Scenario> {
    let mut scenario = load_with_overrides(&args.scenario.scenario, &args.scenario.overrides)?;
    if let Some(stride) = args.stride {
        scenario.sim.sample_stride = stride;
        scenario = scenario.validated()?;
    }
    Ok(scenario)
}

/// Initial estimator disagreement `V1(0)` and estimated radial errors.
pub fn initial_errors(scenario: &Scenario) -> (f64, Vec<f64>) {
    let est = EstimatorState::new(&scenario.observation, &scenario.initial_leader_positions);
    let z0 = scenario
        .initial_follower_positions
        .iter()
        .zip(&est.r)
        .map(|(p, r)| RelativeState::about(*p, *r).rho - scenario.pattern.rho_d)
        .collect();
    (disagreement(&est.r), z0)
}

pub fn scenario_bounds(scenario: &Scenario) -> Result<EstimatorBounds> {
    let (v1_0, _) = initial_errors(scenario);
    theoretical_bounds(scenario.beta(), &scenario.gains, scenario.follower_count(), v1_0)
}

pub struct RunOutcome {
    pub samples: usize,
    pub report: BoundReport,
    pub log: RunLog,
}

fn write_outputs(scenario: &Scenario, bounds: &EstimatorBounds, log: &RunLog, out: &Path, plots: bool) -> Result<BoundReport> {
    create_dir(out)?;
    let csv = to_csv(log);
    write(&out.join("telemetry.csv"), &csv)?;
    let report = bound_report(log, bounds, &scenario.pattern);
    write(&out.join("bound_report.json"), &(serde_json::to_string_pretty(&report).expect("json") + "\n"))?;
    if plots {
        for (name, svg) in render_plots(&Table::parse(&csv)?)? {
            write(&out.join(name), &svg)?;
        }
    }
    Ok(report)
}

fn simulate_into(scenario: &Scenario, out: &Path, plots: bool) -> Result<(RunLog, BoundReport)> {
    let bounds = scenario_bounds(scenario)?;
    let log = Simulator::new(scenario).run()?;
    let report = write_outputs(scenario, &bounds, &log, out, plots)?;
    Ok((log, report))
}

fn simulate_traced(scenario: &Scenario, out: &Path, plots: bool) -> Result<(ControlTrace, BoundReport)> {
    let bounds = scenario_bounds(scenario)?;
    let (log, trace) = Simulator::new(scenario).run_recording_controls()?;
    let report = write_outputs(scenario, &bounds, &log, out, plots)?;
    Ok((trace, report))
}

pub fn cmd_run(args: &RunArgs) -> Result<RunOutcome> {
    let scenario = prepared(args)?;
    let (log, report) = simulate_into(&scenario, &args.out, !args.no_plots)?;
    Ok(RunOutcome { samples: log.samples.len(), report, log })
}

#[derive(Debug, Serialize)]
struct TuneSummary {
    epsilon_d: f64,
    t1_d: f64,
    alpha1_min: Option<f64>,
    error: Option<String>,
}

pub fn cmd_bounds(args: &BoundsArgs) -> Result<Value> {
    let scenario = load_with_overrides(&args.scenario.scenario, &args.scenario.overrides)?;
    let (v1_0, z0) = initial_errors(&scenario);
    let n = scenario.follower_count();
    let gains = &scenario.gains;
    let bounds = theoretical_bounds(scenario.beta(), gains, n, v1_0)?;
    let target = TuningTarget {
        epsilon_d: args.epsilon_d,
        t1_d: args.t1_d,
        beta: scenario.beta(),
        k_e: gains.k_e,
        n,
        eta: gains.eta,
        v1_0,
    };
    let tune = match tune_alpha1(&target) {
        Ok(a) => TuneSummary { epsilon_d: args.epsilon_d, t1_d: args.t1_d, alpha1_min: Some(a), error: None },
        Err(e) => TuneSummary { epsilon_d: args.epsilon_d, t1_d: args.t1_d, alpha1_min: None, error: Some(e.to_string()) },
    };
    Ok(json!({
        "n": n,
        "beta": scenario.beta(),
        "eta": gains.eta,
        "f": bounds.f_value,
        "epsilon": bounds.epsilon,
        "epsilon_rho": bounds.epsilon,
        "epsilon_delta": epsilon_delta(bounds.epsilon, &scenario.pattern),
        "v1_0": v1_0,
        "t1_bound": bounds.t1_bound,
        "t2_bound": t2_bound(&z0, gains),
        "tune_alpha1": tune,
        "notes": [
            "epsilon = f^(1/2) = ((eta + 2 n beta) / (n k_e))^alpha1; raising the ratio to 2*alpha1 gives f itself",
            "t2_bound uses V(0) = 1/2 * sum z_i(0)^2 about the initial estimates",
        ],
    }))
}

/// Runs the continuous estimator and the signum baseline (gain
/// `1.05 beta (n - 1)`) and compares the smoothness of their per-step
/// control inputs after both runs settle.
pub fn cmd_compare(args: &RunArgs) -> Result<Comparison> {
    let base = prepared(args)?;
    let mut continuous = base.clone();
    continuous.sim.estimator = EstimatorKind::Continuous;
    let mut signum = base.clone();
    let k_sgn = baseline_signum_gain(base.beta(), base.follower_count());
    signum.sim.estimator = EstimatorKind::Signum { k_sgn };
    let plots = !args.no_plots;

    let (cont, sgn) = std::thread::scope(|scope| {
        let a = scope.spawn(|| simulate_traced(&continuous, &args.out.join("continuous"), plots));
        let b = scope.spawn(|| simulate_traced(&signum, &args.out.join("signum"), plots));
        (a.join().expect("continuous run panicked"), b.join().expect("signum run panicked"))
    });
    let (cont_trace, cont_report) = cont?;
    let (sgn_trace, sgn_report) = sgn?;

    let window_start = match (cont_report.settled_at, sgn_report.settled_at) {
        (Some(a), Some(b)) => a.max(b),
        _ => 0.5 * base.sim.duration,
    };
    let comparison = compare_dithering(&cont_trace, &sgn_trace, window_start);
    let doc = json!({ "k_sgn": k_sgn, "comparison": comparison });
    write(&args.out.join("comparison.json"), &(serde_json::to_string_pretty(&doc).expect("json") + "\n"))?;
    Ok(comparison)
}
