//! Exit criteria for the crate, one PASS/FAIL line each.
//!
//! Runs with `harness = false` so the report is always printed; the process
//! exits non-zero when any criterion fails.

use std::f64::consts::TAU;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use enclosing::analysis::{bound_report, settling_time, RunLog, Sample};
use enclosing::cli::{cmd_bounds, cmd_compare, scenario_bounds, BoundsArgs, RunArgs, ScenarioArgs};
use enclosing::controller::{delta_rate, t2_bound, z_rate, RingOrder};
use enclosing::engine::Simulator;
use enclosing::estimator::signed_pow;
use enclosing::scenario::{Gains, Scenario};
use enclosing::telemetry::to_csv;
use enclosing::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SETTLE_BAND: f64 = 1e-3;
const SETTLE_DEADLINE: f64 = 60.0;
const EPSILON: f64 = 0.0999;
const EPSILON_DELTA: f64 = 0.0199;
const ESTIMATOR_DEADLINE: f64 = 20.0;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

fn reference_scenario_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/reference.json")
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn max_est_err(s: &Sample) -> f64 {
    s.est_err.iter().fold(0.0, |m, x| m.max(*x))
}

fn mean(points: &[Vec2]) -> Vec2 {
    points.iter().sum::<Vec2>() / points.len() as f64
}

/// Settling of the worst follower for z and delta within the zero band.
fn enclosing_settling(log: &RunLog) -> Option<f64> {
    let times = log.times();
    let z = settling_time(&times, &log.series(|s| max_abs(&s.z)), SETTLE_BAND)?;
    let d = settling_time(&times, &log.series(|s| max_abs(&s.delta)), SETTLE_BAND)?;
    Some(z.max(d))
}

fn estimator_settling(log: &RunLog) -> Option<f64> {
    settling_time(&log.times(), &log.series(max_est_err), EPSILON)
}

/// Post-settling maxima used by the first three criteria:
/// `[|z| after 60 s, |delta| after 60 s, estimator error after its settling,
/// |e_rho| and |e_delta| after all settling]`.
fn post_settling_maxima(scenario: &Scenario, log: &RunLog) -> Option<[f64; 5]> {
    let report = bound_report(log, &scenario_bounds(scenario).ok()?, &scenario.pattern);
    let all = report.settled_at?;
    let est = estimator_settling(log)?;
    Some([
        log.max_after(SETTLE_DEADLINE, |s| max_abs(&s.z)),
        log.max_after(SETTLE_DEADLINE, |s| max_abs(&s.delta)),
        log.max_after(est, max_est_err),
        log.max_after(all, |s| max_abs(&s.e_rho)),
        log.max_after(all, |s| max_abs(&s.e_delta)),
    ])
}

fn round_sig(x: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

fn criterion_1(log: &RunLog, elapsed: Duration) -> Outcome {
    let z = log.max_after(SETTLE_DEADLINE + 1e-9, |s| max_abs(&s.z));
    let d = log.max_after(SETTLE_DEADLINE + 1e-9, |s| max_abs(&s.delta));
    let settle = enclosing_settling(log);
    let passed = z < SETTLE_BAND && d < SETTLE_BAND && settle.is_some_and(|t| t <= SETTLE_DEADLINE) && elapsed.as_secs_f64() < 30.0;
    Outcome::new(
        passed,
        format!("max|z| after 60 s = {z:.3e}, max|delta| = {d:.3e}, settling = {settle:?} s, run took {:.2} s", elapsed.as_secs_f64()),
    )
}

fn criterion_2(log: &RunLog) -> Outcome {
    match estimator_settling(log) {
        Some(t) => {
            let max = log.max_after(t, max_est_err);
            Outcome::new(max < EPSILON && t <= ESTIMATOR_DEADLINE, format!("settled at {t:.2} s, max error after = {max:.4e}"))
        }
        None => Outcome::new(false, "estimator error never settles within epsilon"),
    }
}

fn criterion_3(scenario: &Scenario, log: &RunLog) -> Outcome {
    let bounds = match scenario_bounds(scenario) {
        Ok(b) => b,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let report = bound_report(log, &bounds, &scenario.pattern);
    let Some(all) = report.settled_at else {
        return Outcome::new(false, "run never settles");
    };
    let e_rho = log.max_after(all, |s| max_abs(&s.e_rho));
    let e_delta = log.max_after(all, |s| max_abs(&s.e_delta));

    let printed = cmd_bounds(&BoundsArgs {
        scenario: ScenarioArgs { scenario: reference_scenario_path(), overrides: Vec::new() },
        epsilon_d: 0.1,
        t1_d: 20.0,
    });
    let (eps, eps_delta) = match printed {
        Ok(v) => (v["epsilon_rho"].as_f64().unwrap_or(f64::NAN), v["epsilon_delta"].as_f64().unwrap_or(f64::NAN)),
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let matches_print = (round_sig(eps, 3) - EPSILON).abs() < 1e-12 && (round_sig(eps_delta, 3) - EPSILON_DELTA).abs() < 1e-12;
    Outcome::new(
        e_rho < EPSILON && e_delta < EPSILON_DELTA && matches_print,
        format!("after {all:.2} s: max|e_rho| = {e_rho:.4e}, max|e_delta| = {e_delta:.4e}; bounds epsilon_rho = {eps:.6}, epsilon_delta = {eps_delta:.6}"),
    )
}

fn criterion_4(log: &RunLog) -> Outcome {
    let worst = log.samples.iter().map(|s| (mean(&s.r) - s.lap).norm()).fold(0.0, f64::max);
    Outcome::new(worst < 1e-6, format!("max |mean(r) - LAP| = {worst:.3e} over {} samples", log.samples.len()))
}

fn criterion_5(rng: &mut ChaCha8Rng) -> Outcome {
    let mut violations = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=30);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let p: f64 = rng.gen_range(1e-6..1.0 - 1e-6);
        let total: f64 = x.iter().map(|v| v.abs()).sum();
        let lower = total.powf(p);
        let middle: f64 = x.iter().map(|v| v.abs().powf(p)).sum();
        let upper = (n as f64).powf(1.0 - p) * total.powf(p);
        if lower > middle * (1.0 + 1e-12) || middle > upper * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    Outcome::new(violations == 0, format!("{violations} violations in 1000 trials"))
}

fn random_odd_ratio(rng: &mut ChaCha8Rng) -> f64 {
    let p = 2 * rng.gen_range(1..8) + 1;
    let q = 2 * rng.gen_range(0..8) + 1;
    q as f64 / p as f64
}

fn criterion_6(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=12);
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let w = rng.gen_range(-2.0..2.0);
                a[i][j] = w;
                a[j][i] = w;
            }
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let power = random_odd_ratio(rng);
        let frac = |i: usize, j: usize| signed_pow(b[i] - b[j], power);

        let mut cases = Vec::new();
        for weights in [&c, &b, &vec![1.0; n]] {
            let (mut lhs, mut rhs, mut scale) = (0.0, 0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    let left = a[i][j] * weights[i] * frac(i, j);
                    let right = 0.5 * a[i][j] * (weights[i] - weights[j]) * frac(i, j);
                    lhs += left;
                    rhs += right;
                    scale += left.abs() + right.abs();
                }
            }
            cases.push((lhs, rhs, scale));
        }
        // c = b also equals the half-sum of a_ij |b_i - b_j|^(1 + q/p): p + q is even
        let mut closed = 0.0;
        for i in 0..n {
            for j in 0..n {
                closed += 0.5 * a[i][j] * (b[i] - b[j]).abs().powf(1.0 + power);
            }
        }
        let (lhs_b, _, scale_b) = cases[1];
        cases.push((lhs_b, closed, scale_b));
        // c = 1: the double sum vanishes
        let (lhs_1, _, scale_1) = cases[2];
        cases.push((lhs_1, 0.0, scale_1));

        for (lhs, rhs, scale) in cases {
            if scale > 0.0 {
                worst = worst.max((lhs - rhs).abs() / scale);
            }
        }
    }
    Outcome::new(worst < 1e-9, format!("max relative residual = {worst:.3e}"))
}

fn random_pattern(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total * TAU).collect()
}

/// Random `delta` projected onto `a^T delta = 0`.
fn balanced_delta(rng: &mut ChaCha8Rng, a: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = a.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
    let k = a.iter().zip(&d).map(|(x, y)| x * y).sum::<f64>() / a.iter().map(|x| x * x).sum::<f64>();
    d.iter().zip(a).map(|(y, x)| y - k * x).collect()
}

fn criterion_7(rng: &mut ChaCha8Rng) -> Outcome {
    let gains = Scenario::reference().gains;
    let exponent = gains.alpha3.inverse();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(3..=8);
        let a = random_pattern(rng, n);
        let rho: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..20.0)).collect();
        let angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
        let order = RingOrder::from_angles(&angles);
        let delta = balanced_delta(rng, &a);
        let base = delta_rate(&delta, &rho, &a, &order, &gains).expect("positive radii");
        for lambda in [0.5, 2.0, 10.0] {
            let scaled: Vec<f64> = delta.iter().map(|d| lambda * d).collect();
            let h = delta_rate(&scaled, &rho, &a, &order, &gains).expect("positive radii");
            let diff: f64 = h.iter().zip(&base).map(|(x, y)| (x - lambda.powf(exponent) * y).powi(2)).sum::<f64>().sqrt();
            let norm: f64 = h.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                worst = worst.max(diff / norm);
            }
        }
    }
    Outcome::new(worst < 1e-9, format!("max relative residual = {worst:.3e}"))
}

/// Time for `z_dot = z_rate(z)` to bring `max|z|` below `target`, RK4 with a
/// step tied to the local time scale `|z|^(1 - 1/alpha2)`.
fn z_hitting_time(z0: &[f64], gains: &Gains, target: f64) -> f64 {
    let mut z = z0.to_vec();
    let mut t = 0.0;
    let decay = 1.0 - gains.alpha2.inverse();
    while max_abs(&z) >= target {
        let h = 1e-3 * max_abs(&z).powf(decay).min(1.0);
        let shift = |base: &[f64], k: &[f64], s: f64| -> Vec<f64> { base.iter().zip(k).map(|(x, d)| x + s * d).collect() };
        let k1 = z_rate(&z, gains);
        let k2 = z_rate(&shift(&z, &k1, h / 2.0), gains);
        let k3 = z_rate(&shift(&z, &k2, h / 2.0), gains);
        let k4 = z_rate(&shift(&z, &k3, h), gains);
        for i in 0..z.len() {
            z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
    }
    t
}

fn criterion_8(rng: &mut ChaCha8Rng) -> Outcome {
    let gains = Scenario::reference().gains;
    let alpha = gains.alpha2.value();
    let n = Scenario::reference().follower_count();
    let mut late = 0;
    let mut worst_ratio = 0.0f64;
    for _ in 0..100 {
        let z0: Vec<f64> = (0..n).map(|_| rng.gen_range(-30.0..=30.0)).collect();
        let v0 = 0.5 * z0.iter().map(|z| z * z).sum::<f64>();
        let bound = 2.0 * alpha / (gains.k_z * (alpha - 1.0)) * v0.powf((alpha - 1.0) / (2.0 * alpha));
        assert!((bound - t2_bound(&z0, &gains)).abs() <= 1e-12 * bound, "t2_bound disagrees with the closed form");
        let hit = z_hitting_time(&z0, &gains, 1e-6);
        worst_ratio = worst_ratio.max(hit / bound);
        if hit > bound {
            late += 1;
        }
    }
    Outcome::new(late == 0, format!("{late}/100 initializations settle after T2; worst settling/T2 = {worst_ratio:.4}"))
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let args = RunArgs {
        scenario: ScenarioArgs { scenario: reference_scenario_path(), overrides: Vec::new() },
        out: dir.path().to_owned(),
        no_plots: true,
        stride: None,
    };
    match cmd_compare(&args) {
        Ok(c) => Outcome::new(
            c.tv_ratio < 0.5 && c.max_jump_ratio >= 5.0,
            format!(
                "window from {:.2} s: TV continuous/signum = {:.4}, max jump signum/continuous = {:.4}",
                c.window_start, c.tv_ratio, c.max_jump_ratio
            ),
        ),
        Err(e) => Outcome::new(false, e.to_string()),
    }
}

fn criterion_10(scenario: &Scenario, log: &RunLog) -> Outcome {
    let again = match Simulator::new(scenario).run() {
        Ok(l) => l,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let identical = to_csv(log) == to_csv(&again);

    let mut fine = scenario.clone();
    fine.sim.dt /= 2.0;
    fine.sim.sample_stride *= 2;
    let fine_log = match Simulator::new(&fine).run() {
        Ok(l) => l,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let (Some(coarse), Some(halved)) = (post_settling_maxima(scenario, log), post_settling_maxima(&fine, &fine_log)) else {
        return Outcome::new(false, "a run never settles");
    };
    let change = coarse.iter().zip(&halved).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Outcome::new(
        identical && change < 1e-4,
        format!("bit-identical CSV: {identical}; largest change in post-settling maxima when halving dt = {change:.3e}"),
    )
}

fn main() -> ExitCode {
    let scenario = Scenario::reference();
    let started = Instant::now();
    let log = Simulator::new(&scenario).run().expect("reference scenario runs");
    let elapsed = started.elapsed();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);

    let results = [
        ("1 reference scenario settles", criterion_1(&log, elapsed)),
        ("2 estimator accuracy", criterion_2(&log)),
        ("3 real-error bounds", criterion_3(&scenario, &log)),
        ("4 estimate mean tracks LAP", criterion_4(&log)),
        ("5 power-sum inequality", criterion_5(&mut rng)),
        ("6 weighted double-sum identities", criterion_6(&mut rng)),
        ("7 spacing field homogeneity", criterion_7(&mut rng)),
        ("8 radial settling-time bound", criterion_8(&mut rng)),
        ("9 dithering contrast", criterion_9()),
        ("10 determinism and step halving", criterion_10(&scenario, &log)),
    ];

    let mut failed = 0;
    for (name, outcome) in &results {
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        println!("{tag} criterion {name}: {}", outcome.detail);
        failed += usize::from(!outcome.passed);
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
