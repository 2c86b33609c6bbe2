//! Control smoothness with the continuous estimator versus the signum baseline.
//!
//! `cargo run --release --example compare_estimators -- [rk4|euler]`

use enclosing::analysis::{compare_dithering, settling_time, ControlTrace};
use enclosing::engine::Simulator;
use enclosing::estimator::baseline_signum_gain;
use enclosing::scenario::{EstimatorKind, Integrator, Scenario};

fn traced(s: &Scenario) -> enclosing::Result<(ControlTrace, f64)> {
    let (log, trace) = Simulator::new(s).run_recording_controls()?;
    let z = log.series(|x| x.z.iter().fold(0.0f64, |m, z| m.max(z.abs())));
    let settled = settling_time(&log.times(), &z, 1e-3).unwrap_or(0.5 * s.sim.duration);
    Ok((trace, settled))
}

fn main() -> enclosing::Result<()> {
    let mut base = Scenario::reference();
    base.sim.duration = 60.0;
    if std::env::args().nth(1).as_deref() == Some("euler") {
        base.sim.integrator = Integrator::Euler;
    }
    let k_sgn = baseline_signum_gain(base.beta(), base.follower_count());
    let mut signum = base.clone();
    signum.sim.estimator = EstimatorKind::Signum { k_sgn };

    let (cont, t_cont) = traced(&base)?;
    let (sgn, t_sgn) = traced(&signum)?;
    let c = compare_dithering(&cont, &sgn, t_cont.max(t_sgn));

    println!("integrator {:?}, k_sgn = {k_sgn:.4}, window from t = {:.2} s", base.sim.integrator, c.window_start);
    println!("follower  TV(cont)    TV(sgn)     jump(cont)  jump(sgn)");
    for (i, (a, b)) in c.continuous.per_follower.iter().zip(&c.signum.per_follower).enumerate() {
        println!(
            "F{}        {:.3e}   {:.3e}   {:.3e}   {:.3e}",
            i + 1,
            a.total_variation,
            b.total_variation,
            a.max_jump,
            b.max_jump
        );
    }
    println!("TV ratio = {:.3}, max jump ratio = {:.3}", c.tv_ratio, c.max_jump_ratio);
    Ok(())
}
