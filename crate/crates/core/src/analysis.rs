//! Post-run metrics over a [`RunLog`].

use serde::Serialize;

use crate::controller::{spacing_errors, RelativeState, RingOrder};
use crate::engine::SwarmState;
use crate::estimator::{disagreement, EstimatorBounds};
use crate::scenario::{mean, wrap_angle, OddRatio, Scenario, SpacingPattern};
use crate::Vec2;

/// Band used for "converged to zero" on the estimated errors `z` and `delta`.
pub const ZERO_BAND: f64 = 1e-3;

/// Everything recorded at one logged instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub followers: Vec<Vec2>,
    pub leaders: Vec<Vec2>,
    /// Center estimates.
    pub r: Vec<Vec2>,
    pub u: Vec<Vec2>,
    /// True leaders' average position.
    pub lap: Vec2,
    pub z: Vec<f64>,
    pub delta: Vec<f64>,
    /// Radius about the estimate.
    pub rho_est: Vec<f64>,
    /// Radius about the true center.
    pub rho: Vec<f64>,
    pub e_rho: Vec<f64>,
    pub e_delta: Vec<f64>,
    /// `|r_i - lap|`.
    pub est_err: Vec<f64>,
    /// True minus estimated angle, in `(-pi, pi]`.
    pub gamma: Vec<f64>,
    pub v1: f64,
    pub v2: f64,
}

impl Sample {
    pub fn capture(scenario: &Scenario, order: &RingOrder, state: &SwarmState, u: &[Vec2]) -> Self {
        let pattern = &scenario.pattern;
        let lap = mean(&state.leaders);
        let r = state.estimator.r.clone();
        let est: Vec<RelativeState> = state.followers.iter().zip(&r).map(|(p, c)| RelativeState::about(*p, *c)).collect();
        let real: Vec<RelativeState> = state.followers.iter().map(|p| RelativeState::about(*p, lap)).collect();
        let radii = |v: &[RelativeState]| v.iter().map(|s| s.rho).collect::<Vec<_>>();
        let angles = |v: &[RelativeState]| v.iter().map(|s| s.theta).collect::<Vec<_>>();
        let estimated = spacing_errors(&radii(&est), &angles(&est), order, pattern);
        let actual = spacing_errors(&radii(&real), &angles(&real), order, pattern);
        let est_err = r.iter().map(|ri| (ri - lap).norm()).collect();
        let gamma = real.iter().zip(&est).map(|(a, b)| wrap_angle(a.theta - b.theta)).collect();
        Self {
            t: state.t,
            followers: state.followers.clone(),
            leaders: state.leaders.clone(),
            v1: disagreement(&r),
            v2: delta_lyapunov(&estimated.delta, scenario.gains.alpha3),
            r,
            u: u.to_vec(),
            lap,
            rho_est: radii(&est),
            rho: radii(&real),
            z: estimated.z,
            delta: estimated.delta,
            e_rho: actual.z,
            e_delta: actual.delta,
            est_err,
            gamma,
        }
    }
}

/// Logged trajectory of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub follower_count: usize,
    pub leader_count: usize,
    pub dt: f64,
    pub sample_stride: usize,
    pub alpha3: OddRatio,
    /// Successor table of the frozen ring order.
    pub successor: Vec<usize>,
    pub samples: Vec<Sample>,
}

impl RunLog {
    pub fn new(scenario: &Scenario, order: &RingOrder) -> Self {
        Self {
            follower_count: scenario.follower_count(),
            leader_count: scenario.leader_count(),
            dt: scenario.sim.dt,
            sample_stride: scenario.sim.sample_stride,
            alpha3: scenario.gains.alpha3,
            successor: (0..order.len()).map(|i| order.successor(i)).collect(),
            samples: Vec::new(),
        }
    }

    pub fn push(&mut self, sample: Sample) {
        self.samples.push(sample);
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// One scalar per sample.
    pub fn series(&self, f: impl Fn(&Sample) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }

    /// Control trace of every follower, optionally from `from` onwards.
    pub fn control_traces(&self, from: f64) -> Vec<Vec<Vec2>> {
        (0..self.follower_count)
            .map(|i| self.samples.iter().filter(|s| s.t >= from).map(|s| s.u[i]).collect())
            .collect()
    }

    /// Largest value of `f` over samples with `t >= from`.
    pub fn max_after(&self, from: f64, f: impl Fn(&Sample) -> f64) -> f64 {
        self.samples.iter().filter(|s| s.t >= from).map(f).fold(0.0, f64::max)
    }

    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("log holds at least the initial sample")
    }
}

/// Earliest sample time after which `|series| <= band` through the end of
/// the log; `None` if the last sample is outside the band.
pub fn settling_time(times: &[f64], series: &[f64], band: f64) -> Option<f64> {
    assert_eq!(times.len(), series.len());
    match series.iter().rposition(|x| !(x.abs() <= band)) {
        None => times.first().copied(),
        Some(last_out) => times.get(last_out + 1).copied(),
    }
}

/// `V2 = sum |delta_i|^(1 + 1/alpha3)`. With odd `p`, `q` the exponent
/// `(p + q)/p` has an even numerator, so the terms are nonnegative.
pub fn delta_lyapunov(delta: &[f64], alpha3: OddRatio) -> f64 {
    let exponent = 1.0 + alpha3.inverse();
    delta.iter().map(|d| d.abs().powf(exponent)).sum()
}

/// `V1` (estimate disagreement) and `V2` (spacing-error Lyapunov) per sample.
pub fn lyapunov_traces(log: &RunLog) -> (Vec<f64>, Vec<f64>) {
    log.samples.iter().map(|s| (disagreement(&s.r), delta_lyapunov(&s.delta, log.alpha3))).unzip()
}

/// Spacing bound implied by an estimator accuracy `epsilon`.
pub fn epsilon_delta(epsilon: f64, pattern: &SpacingPattern) -> f64 {
    2.0 * (epsilon / pattern.rho_d).atan() / pattern.min_angle()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PostSettling {
    pub z: f64,
    pub delta: f64,
    pub estimator: f64,
    pub e_rho: f64,
    pub e_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FollowerReport {
    pub follower: usize,
    /// `|z_i| <= ZERO_BAND`.
    pub settling_z: Option<f64>,
    /// `|delta_i| <= ZERO_BAND`.
    pub settling_delta: Option<f64>,
    /// `|r_i - lap| <= epsilon`.
    pub settling_estimator: Option<f64>,
    pub settling_e_rho: Option<f64>,
    pub settling_e_delta: Option<f64>,
    /// Maxima of each metric after its own settling time.
    pub max_post_settling: PostSettling,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub f_value: f64,
    pub epsilon: f64,
    pub epsilon_rho: f64,
    pub epsilon_delta: f64,
    pub zero_band: f64,
    /// Time after which every follower's `z`, `delta` and estimator error
    /// have settled; `None` if some never do.
    pub settled_at: Option<f64>,
    /// Maxima of the real errors over all followers after `settled_at`.
    pub max_after_settled: Option<PostSettling>,
    pub per_follower: Vec<FollowerReport>,
    pub violations: Vec<String>,
    pub notes: Vec<String>,
}

/// Settling times and post-settling maxima against the theoretical bounds.
pub fn bound_report(log: &RunLog, bounds: &EstimatorBounds, pattern: &SpacingPattern) -> BoundReport {
    let times = log.times();
    let epsilon = bounds.epsilon;
    let eps_delta = epsilon_delta(epsilon, pattern);
    let mut violations = Vec::new();
    let mut per_follower = Vec::with_capacity(log.follower_count);
    let mut settled_at = Some(0.0f64);

    for i in 0..log.follower_count {
        let metric = |f: &dyn Fn(&Sample) -> f64, band: f64, name: &str, violations: &mut Vec<String>| {
            let series = log.series(f);
            let settle = settling_time(&times, &series, band);
            let max = settle.map_or(f64::NAN, |t0| log.max_after(t0, |s| f(s).abs()));
            if settle.is_none() {
                violations.push(format!("follower {}: {name} never settles within {band:e}", i + 1));
            }
            (settle, max)
        };
        let (sz, mz) = metric(&|s| s.z[i], ZERO_BAND, "z", &mut violations);
        let (sd, md) = metric(&|s| s.delta[i], ZERO_BAND, "delta", &mut violations);
        let (se, me) = metric(&|s| s.est_err[i], epsilon, "estimator error", &mut violations);
        let (sr, mr) = metric(&|s| s.e_rho[i], epsilon, "e_rho", &mut violations);
        let (sa, ma) = metric(&|s| s.e_delta[i], eps_delta, "e_delta", &mut violations);
        settled_at = match (settled_at, sz, sd, se) {
            (Some(t), Some(a), Some(b), Some(c)) => Some(t.max(a).max(b).max(c)),
            _ => None,
        };
        per_follower.push(FollowerReport {
            follower: i + 1,
            settling_z: sz,
            settling_delta: sd,
            settling_estimator: se,
            settling_e_rho: sr,
            settling_e_delta: sa,
            max_post_settling: PostSettling { z: mz, delta: md, estimator: me, e_rho: mr, e_delta: ma },
        });
    }

    let max_after_settled = settled_at.map(|t0| {
        let all = |f: &dyn Fn(&Sample) -> f64| log.max_after(t0, f);
        PostSettling {
            z: all(&|s| s.z.iter().fold(0.0, |m, x| m.max(x.abs()))),
            delta: all(&|s| s.delta.iter().fold(0.0, |m, x| m.max(x.abs()))),
            estimator: all(&|s| s.est_err.iter().fold(0.0, |m, x| m.max(*x))),
            e_rho: all(&|s| s.e_rho.iter().fold(0.0, |m, x| m.max(x.abs()))),
            e_delta: all(&|s| s.e_delta.iter().fold(0.0, |m, x| m.max(x.abs()))),
        }
    });
    if let Some(m) = &max_after_settled {
        if !(m.e_rho < epsilon) {
            violations.push(format!("max |e_rho| after settling {} >= epsilon_rho {epsilon}", m.e_rho));
        }
        if !(m.e_delta < eps_delta) {
            violations.push(format!("max |e_delta| after settling {} >= epsilon_delta {eps_delta}", m.e_delta));
        }
    }

    BoundReport {
        f_value: bounds.f_value,
        epsilon,
        epsilon_rho: epsilon,
        epsilon_delta: eps_delta,
        zero_band: ZERO_BAND,
        settled_at,
        max_after_settled,
        per_follower,
        violations,
        notes: vec![
            "epsilon = f^(1/2) = ((eta + 2 n beta) / (n k_e))^alpha1; raising the same ratio to 2*alpha1 gives f itself, not epsilon"
                .to_owned(),
        ],
    }
}

/// Control input of every follower at every integration step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ControlTrace {
    pub times: Vec<f64>,
    /// Indexed by follower, then step.
    pub u: Vec<Vec<Vec2>>,
}

impl ControlTrace {
    pub fn new(follower_count: usize) -> Self {
        Self { times: Vec::new(), u: vec![Vec::new(); follower_count] }
    }

    pub fn push(&mut self, t: f64, u: &[Vec2]) {
        self.times.push(t);
        for (trace, ui) in self.u.iter_mut().zip(u) {
            trace.push(*ui);
        }
    }

    /// Per-follower traces restricted to `t >= from`.
    pub fn window(&self, from: f64) -> Vec<Vec<Vec2>> {
        let start = self.times.partition_point(|&t| t < from);
        self.u.iter().map(|trace| trace[start..].to_vec()).collect()
    }
}

/// Total variation and largest single-sample jump of one control trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dithering {
    pub total_variation: f64,
    pub max_jump: f64,
}

/// Per-follower `sum_k |u(t_k+1) - u(t_k)|` and the largest increment.
pub fn dithering_metric(u_series: &[Vec<Vec2>]) -> Vec<Dithering> {
    u_series
        .iter()
        .map(|trace| {
            trace.windows(2).map(|w| (w[1] - w[0]).norm()).fold(
                Dithering { total_variation: 0.0, max_jump: 0.0 },
                |acc, jump| Dithering { total_variation: acc.total_variation + jump, max_jump: acc.max_jump.max(jump) },
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DitheringSummary {
    pub per_follower: Vec<Dithering>,
    pub total_variation: f64,
    pub max_jump: f64,
}

impl DitheringSummary {
    pub fn from_traces(traces: &[Vec<Vec2>]) -> Self {
        let per_follower = dithering_metric(traces);
        Self {
            total_variation: per_follower.iter().map(|d| d.total_variation).sum(),
            max_jump: per_follower.iter().map(|d| d.max_jump).fold(0.0, f64::max),
            per_follower,
        }
    }

    /// Over the logged samples with `t >= from`.
    pub fn of(log: &RunLog, from: f64) -> Self {
        Self::from_traces(&log.control_traces(from))
    }
}

/// Control smoothness of two runs of the same scenario over a common window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub window_start: f64,
    pub continuous: DitheringSummary,
    pub signum: DitheringSummary,
    /// Continuous over signum total variation.
    pub tv_ratio: f64,
    /// Signum over continuous largest jump.
    pub max_jump_ratio: f64,
}

/// Compares per-step control traces over `t >= window_start`.
pub fn compare_dithering(continuous: &ControlTrace, signum: &ControlTrace, window_start: f64) -> Comparison {
    let c = DitheringSummary::from_traces(&continuous.window(window_start));
    let s = DitheringSummary::from_traces(&signum.window(window_start));
    Comparison {
        window_start,
        tv_ratio: c.total_variation / s.total_variation,
        max_jump_ratio: s.max_jump / c.max_jump,
        continuous: c,
        signum: s,
    }
}
