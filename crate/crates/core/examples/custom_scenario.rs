//! Build a scenario of your own: five followers on a ring graph escorting
//! three leaders, one of which turns halfway through.

use enclosing::analysis::bound_report;
use enclosing::cli::scenario_bounds;
use enclosing::engine::Simulator;
use enclosing::scenario::Scenario;
use serde_json::json;

fn main() -> enclosing::Result<()> {
    let a = std::f64::consts::TAU / 5.0;
    let scenario = Scenario::from_value(json!({
        "followers": {
            "count": 5,
            "adjacency": [[0,1,0,0,1],[1,0,1,0,0],[0,1,0,1,0],[0,0,1,0,1],[1,0,0,1,0]],
            "initial_positions": [[15.0, 0.0], [0.0, 14.0], [-12.0, 3.0], [-5.0, -16.0], [9.0, -9.0]]
        },
        "leaders": {
            "count": 3,
            "initial_positions": [[0.0, 0.0], [2.0, 0.0], [1.0, 2.0]],
            "profiles": [
                {"kind": "constant", "velocity": [0.5, 0.0]},
                {"kind": "constant", "velocity": [0.5, 0.0]},
                {"kind": "piecewise", "breakpoints": [
                    {"t": 0.0, "velocity": [0.5, 0.0]},
                    {"t": 30.0, "velocity": [0.5, 0.3]}
                ]}
            ]
        },
        "observation": [[1,0,0,0,0],[0,0,1,0,0],[0,0,0,1,1]],
        "pattern": {"rho_d": 10.0, "w_d": 0.1, "a": [a, a, a, a, a]},
        "gains": {"k_e": 4.0, "alpha1": [5, 3], "k_z": 2.0, "alpha2": [3, 1], "k_delta": 2.0, "alpha3": [3, 1]},
        "sim": {"dt": 1e-3, "duration": 60.0, "integrator": "rk4", "feedforward_mode": "finite_difference", "beta": 0.6}
    }))?;

    let bounds = scenario_bounds(&scenario)?;
    let log = Simulator::new(&scenario).run()?;
    let report = bound_report(&log, &bounds, &scenario.pattern);
    println!("epsilon = {:.4}, settled at {:?}", report.epsilon, report.settled_at);
    if let Some(m) = &report.max_after_settled {
        println!("after settling: max|e_rho| = {:.3e}, max|e_delta| = {:.3e}", m.e_rho, m.e_delta);
    }
    let last = log.final_sample();
    println!("final radii: {:.3?}", last.rho);
    Ok(())
}
