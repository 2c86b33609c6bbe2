//! Simulate a scenario and print a summary of the bound report.
//!
//! `cargo run --release --example simulate -- [scenario.json] [out-dir]`

use std::path::PathBuf;

use enclosing::analysis::bound_report;
use enclosing::cli::scenario_bounds;
use enclosing::engine::Simulator;
use enclosing::scenario::{load_scenario, Scenario};
use enclosing::telemetry::to_csv;

fn main() -> enclosing::Result<()> {
    let mut args = std::env::args().skip(1);
    let scenario = match args.next() {
        Some(path) => load_scenario(path)?,
        None => Scenario::reference(),
    };
    let out = args.next().map(PathBuf::from);

    let bounds = scenario_bounds(&scenario)?;
    let log = Simulator::new(&scenario).run()?;
    let report = bound_report(&log, &bounds, &scenario.pattern);

    println!("samples: {}", log.samples.len());
    println!("epsilon = {:.6}, epsilon_delta = {:.6}", report.epsilon, report.epsilon_delta);
    match report.settled_at {
        Some(t) => println!("settled at t = {t:.3} s"),
        None => println!("did not settle"),
    }
    for f in &report.per_follower {
        println!(
            "F{}: z {:?}  delta {:?}  est {:?}  max|e_rho| {:.3e}  max|e_delta| {:.3e}",
            f.follower, f.settling_z, f.settling_delta, f.settling_estimator, f.max_post_settling.e_rho, f.max_post_settling.e_delta
        );
    }
    println!("final estimator errors: {:?}", log.final_sample().est_err);
    for v in &report.violations {
        println!("violation: {v}");
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).map_err(|source| enclosing::Error::Io { path: dir.clone(), source })?;
        let path = dir.join("telemetry.csv");
        std::fs::write(&path, to_csv(&log)).map_err(|source| enclosing::Error::Io { path, source })?;
    }
    Ok(())
}
