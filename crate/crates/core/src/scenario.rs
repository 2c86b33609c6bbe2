//! Experiment description: agents, graphs, spacing pattern, gains, leader
//! motion and integration settings, plus the JSON file format that carries
//! them.
//!
//! Loading always validates. A [`Scenario`] that exists satisfies:
//!
//! * the follower graph is undirected, 0/1 weighted and connected;
//! * every leader is observed by at least one follower;
//! * every leader speed stays below `beta` over the horizon;
//! * the spacing pattern is admissible for the initial leader positions;
//! * all gains are positive and every exponent is a ratio of odd integers
//!   `p/q` with `p > q >= 1`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::signed_pow;
use crate::topology::{is_connected, FollowerGraph, ObservationGraph};
use crate::Vec2;

/// Tolerance on the included angles summing to a full turn.
pub const ANGLE_SUM_TOL: f64 = 1e-12;

/// Default slack used in the estimator bound.
pub const DEFAULT_ETA: f64 = 1e-6;

/// Exponent `p/q` with `p`, `q` positive odd integers and `p > q`.
/// Serialized as `[p, q]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct OddRatio {
    pub p: u32,
    pub q: u32,
}

impl From<[u32; 2]> for OddRatio {
    fn from([p, q]: [u32; 2]) -> Self {
        Self { p, q }
    }
}

impl From<OddRatio> for [u32; 2] {
    fn from(r: OddRatio) -> Self {
        [r.p, r.q]
    }
}

impl OddRatio {
    pub const fn new(p: u32, q: u32) -> Self {
        Self { p, q }
    }

    /// `p / q`.
    pub fn value(self) -> f64 {
        f64::from(self.p) / f64::from(self.q)
    }

    /// `q / p`, the exponent applied inside the control laws.
    pub fn inverse(self) -> f64 {
        f64::from(self.q) / f64::from(self.p)
    }

    /// `x^(1/alpha)` with sign preserved.
    pub fn signed_root(self, x: f64) -> f64 {
        signed_pow(x, self.inverse())
    }

    fn validate(self, name: &str) -> Result<()> {
        let Self { p, q } = self;
        if p % 2 == 0 || q % 2 == 0 || q == 0 {
            return Err(Error::invalid(name, format!("[{p}, {q}] must both be positive odd integers")));
        }
        if p <= q {
            return Err(Error::invalid(name, format!("[{p}, {q}] requires p > q")));
        }
        Ok(())
    }
}

/// Desired formation: radius, rotation rate and per-follower included
/// angles (angle from follower `i` to its ring successor).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacingPattern {
    pub rho_d: f64,
    pub w_d: f64,
    pub a: Vec<f64>,
}

impl SpacingPattern {
    pub fn min_angle(&self) -> f64 {
        self.a.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// First violated admissibility condition, if any.
    pub fn violation(&self, leader_positions: &[Vec2]) -> Option<Error> {
        if self.a.iter().any(|&a| !(a > 0.0)) {
            return Some(Error::invalid("pattern.a", "every included angle must be positive"));
        }
        let sum: f64 = self.a.iter().sum();
        if (sum - TAU).abs() > ANGLE_SUM_TOL {
            return Some(Error::invalid("pattern.a", format!("included angles sum to {sum}, expected 2*pi")));
        }
        if !(self.w_d > 0.0) {
            return Some(Error::invalid("pattern.w_d", format!("w_d = {} must be positive", self.w_d)));
        }
        let spread = leader_spread(leader_positions);
        if !(self.rho_d > spread) {
            return Some(Error::invalid(
                "pattern.rho_d",
                format!("rho_d = {} does not exceed the leader spread {spread}", self.rho_d),
            ));
        }
        None
    }
}

/// Largest leader distance from the leaders' average position.
pub fn leader_spread(leader_positions: &[Vec2]) -> f64 {
    let center = mean(leader_positions);
    leader_positions.iter().map(|p| (p - center).norm()).fold(0.0, f64::max)
}

pub(crate) fn mean(points: &[Vec2]) -> Vec2 {
    points.iter().sum::<Vec2>() / points.len() as f64
}

/// Admissibility of a spacing pattern against the given leader positions.
pub fn validate_pattern(pattern: &SpacingPattern, leader_positions: &[Vec2]) -> bool {
    pattern.violation(leader_positions).is_none()
}

/// Estimator and controller gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gains {
    pub k_e: f64,
    pub alpha1: OddRatio,
    pub k_z: f64,
    pub alpha2: OddRatio,
    pub k_delta: f64,
    pub alpha3: OddRatio,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

impl Gains {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gains.k_e", self.k_e), ("gains.k_z", self.k_z), ("gains.k_delta", self.k_delta), ("gains.eta", self.eta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("{v} must be a positive finite number")));
            }
        }
        self.alpha1.validate("gains.alpha1")?;
        self.alpha2.validate("gains.alpha2")?;
        self.alpha3.validate("gains.alpha3")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Breakpoint {
    pub t: f64,
    pub velocity: [f64; 2],
}

/// Leader velocity as a function of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityProfile {
    Constant {
        velocity: [f64; 2],
    },
    /// `base + amplitude * sin(omega * t + phase)` along `axis`.
    Sinusoid {
        base: [f64; 2],
        amplitude: f64,
        omega: f64,
        phase: f64,
        axis: Axis,
    },
    /// Zero-order hold over breakpoints; the first breakpoint is at `t = 0`.
    Piecewise { breakpoints: Vec<Breakpoint> },
}

impl VelocityProfile {
    pub fn velocity(&self, t: f64) -> Vec2 {
        match self {
            VelocityProfile::Constant { velocity } => Vec2::from(*velocity),
            VelocityProfile::Sinusoid { base, amplitude, omega, phase, axis } => {
                let mut v = Vec2::from(*base);
                let s = amplitude * (omega * t + phase).sin();
                match axis {
                    Axis::X => v.x += s,
                    Axis::Y => v.y += s,
                }
                v
            }
            VelocityProfile::Piecewise { breakpoints } => {
                let idx = breakpoints.partition_point(|b| b.t <= t).saturating_sub(1);
                Vec2::from(breakpoints[idx].velocity)
            }
        }
    }

    /// Supremum of the speed over `[0, duration]`.
    pub fn max_speed(&self, duration: f64) -> f64 {
        match self {
            VelocityProfile::Constant { velocity } => Vec2::from(*velocity).norm(),
            VelocityProfile::Sinusoid { base, amplitude, omega, phase, axis } => {
                // speed^2 is convex in s = sin(.), so the max sits at an end of
                // the range s sweeps over the horizon.
                let (lo, hi) = sine_range(*omega, *phase, duration);
                let base = Vec2::from(*base);
                let speed_at = |s: f64| {
                    let mut v = base;
                    match axis {
                        Axis::X => v.x += amplitude * s,
                        Axis::Y => v.y += amplitude * s,
                    }
                    v.norm()
                };
                speed_at(lo).max(speed_at(hi))
            }
            VelocityProfile::Piecewise { breakpoints } => breakpoints
                .iter()
                .filter(|b| b.t <= duration)
                .map(|b| Vec2::from(b.velocity).norm())
                .fold(0.0, f64::max),
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        let what = || format!("leaders.profiles[{index}]");
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            VelocityProfile::Constant { velocity } if !finite(velocity) => {
                Err(Error::invalid(what(), "velocity must be finite"))
            }
            VelocityProfile::Sinusoid { base, amplitude, omega, phase, .. }
                if !finite(base) || !finite(&[*amplitude, *omega, *phase]) =>
            {
                Err(Error::invalid(what(), "sinusoid parameters must be finite"))
            }
            VelocityProfile::Piecewise { breakpoints } => {
                if breakpoints.first().map(|b| b.t) != Some(0.0) {
                    return Err(Error::invalid(what(), "piecewise profile must start with a breakpoint at t = 0"));
                }
                if breakpoints.windows(2).any(|w| !(w[1].t > w[0].t)) {
                    return Err(Error::invalid(what(), "breakpoint times must be strictly increasing"));
                }
                if breakpoints.iter().any(|b| !finite(&b.velocity)) {
                    return Err(Error::invalid(what(), "velocity must be finite"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Range of `sin(omega * t + phase)` for `t` in `[0, duration]`.
fn sine_range(omega: f64, phase: f64, duration: f64) -> (f64, f64) {
    let a = phase;
    let b = omega * duration + phase;
    let (start, end) = if a <= b { (a, b) } else { (b, a) };
    let contains = |target: f64| {
        // smallest target + 2k*pi that is >= start
        let k = ((start - target) / TAU).ceil();
        target + k * TAU <= end
    };
    let mut lo = start.sin().min(end.sin());
    let mut hi = start.sin().max(end.sin());
    if contains(FRAC_PI_2) {
        hi = 1.0;
    }
    if contains(-FRAC_PI_2) {
        lo = -1.0;
    }
    (lo, hi)
}

/// Whether every profile stays at or below `beta` over `[0, duration]`.
pub fn check_velocity_bound(profiles: &[VelocityProfile], beta: f64, duration: f64) -> bool {
    profiles.iter().all(|p| p.max_speed(duration) <= beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Euler,
    Rk4,
}

/// Source of the leader-observation rate inside the feedforward term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedforwardMode {
    /// Backward difference of the local observation between steps.
    FiniteDifference,
    /// Exact leader velocities; validation only.
    OracleVelocity,
}

/// Which distributed estimator the followers run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorKind {
    /// Continuous fractional-power estimator.
    Continuous,
    /// Discontinuous unit-vector baseline with gain `k_sgn`.
    Signum { k_sgn: f64 },
}

/// Integration and run settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    pub dt: f64,
    pub duration: f64,
    pub integrator: Integrator,
    pub feedforward_mode: FeedforwardMode,
    pub beta: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
    /// Use `w_d` as a literal tangential speed instead of an angular rate.
    #[serde(default)]
    pub wd_literal: bool,
    #[serde(default = "default_estimator")]
    pub estimator: EstimatorKind,
}

fn default_stride() -> usize {
    10
}

fn default_estimator() -> EstimatorKind {
    EstimatorKind::Continuous
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FollowersSection {
    count: usize,
    adjacency: Vec<Vec<u8>>,
    initial_positions: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LeadersSection {
    count: usize,
    initial_positions: Vec<[f64; 2]>,
    profiles: Vec<VelocityProfile>,
}

/// On-disk layout. Field order here is the canonical key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    followers: FollowersSection,
    leaders: LeadersSection,
    observation: Vec<Vec<u8>>,
    pattern: SpacingPattern,
    gains: Gains,
    sim: SimSettings,
}

/// A validated experiment description. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub followers: FollowerGraph,
    pub observation: ObservationGraph,
    pub pattern: SpacingPattern,
    pub gains: Gains,
    pub leader_profiles: Vec<VelocityProfile>,
    pub initial_follower_positions: Vec<Vec2>,
    pub initial_leader_positions: Vec<Vec2>,
    pub sim: SimSettings,
}

impl Scenario {
    /// Bundled four-follower, two-leader reference scenario.
    pub fn reference() -> Self {
        Self::from_json_str(crate::REFERENCE_SCENARIO_JSON).expect("bundled scenario is valid")
    }

    pub fn follower_count(&self) -> usize {
        self.followers.node_count()
    }

    pub fn leader_count(&self) -> usize {
        self.observation.leader_count()
    }

    pub fn beta(&self) -> f64 {
        self.sim.beta
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_file(file)
    }

    /// Canonical JSON tree, with every optional key written out.
    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_file()).expect("scenario serializes")
    }

    /// Canonical pretty-printed JSON, newline terminated.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("scenario serializes");
        s.push('\n');
        s
    }

    /// Re-validates after mutation, e.g. when a sweep edits a copy.
    pub fn validated(self) -> Result<Self> {
        Self::from_file(self.to_file())
    }

    fn to_file(&self) -> ScenarioFile {
        let points = |v: &[Vec2]| v.iter().map(|p| [p.x, p.y]).collect();
        ScenarioFile {
            followers: FollowersSection {
                count: self.follower_count(),
                adjacency: self.followers.adjacency().to_vec(),
                initial_positions: points(&self.initial_follower_positions),
            },
            leaders: LeadersSection {
                count: self.leader_count(),
                initial_positions: points(&self.initial_leader_positions),
                profiles: self.leader_profiles.clone(),
            },
            observation: self.observation.edges().to_vec(),
            pattern: self.pattern.clone(),
            gains: self.gains.clone(),
            sim: self.sim.clone(),
        }
    }

    fn from_file(file: ScenarioFile) -> Result<Self> {
        let ScenarioFile { followers, leaders, observation, pattern, gains, sim } = file;
        let n = followers.count;
        let m = leaders.count;
        if n < 2 {
            return Err(Error::invalid("followers.count", format!("need at least 2 followers, got {n}")));
        }
        if m < 1 {
            return Err(Error::invalid("leaders.count", "need at least 1 leader"));
        }
        if followers.adjacency.len() != n {
            return Err(Error::invalid("adjacency.shape", format!("expected {n} rows")));
        }
        if followers.initial_positions.len() != n {
            return Err(Error::invalid("followers.initial_positions", format!("expected {n} positions")));
        }
        if leaders.initial_positions.len() != m {
            return Err(Error::invalid("leaders.initial_positions", format!("expected {m} positions")));
        }
        if leaders.profiles.len() != m {
            return Err(Error::invalid("leaders.profiles", format!("expected {m} profiles")));
        }
        if observation.len() != m {
            return Err(Error::invalid("observation.shape", format!("expected {m} leader rows")));
        }
        let all_finite = |pts: &[[f64; 2]]| pts.iter().flatten().all(|x| x.is_finite());
        if !all_finite(&followers.initial_positions) || !all_finite(&leaders.initial_positions) {
            return Err(Error::invalid("initial_positions", "positions must be finite"));
        }

        let graph = FollowerGraph::new(followers.adjacency)?;
        if !is_connected(&graph) {
            return Err(Error::invalid("connectivity", "follower graph is not connected"));
        }
        let observation = ObservationGraph::new(observation, n)?;

        let follower_positions: Vec<Vec2> = followers.initial_positions.iter().map(|&p| Vec2::from(p)).collect();
        let leader_positions: Vec<Vec2> = leaders.initial_positions.iter().map(|&p| Vec2::from(p)).collect();

        if pattern.a.len() != n {
            return Err(Error::invalid("pattern.a", format!("expected {n} included angles, got {}", pattern.a.len())));
        }
        if !(pattern.rho_d.is_finite() && pattern.w_d.is_finite()) {
            return Err(Error::invalid("pattern", "rho_d and w_d must be finite"));
        }
        if let Some(err) = pattern.violation(&leader_positions) {
            return Err(err);
        }
        gains.validate()?;

        if !(sim.dt > 0.0 && sim.dt.is_finite()) {
            return Err(Error::invalid("sim.dt", format!("dt = {} must be positive", sim.dt)));
        }
        if !(sim.duration > 0.0 && sim.duration.is_finite()) {
            return Err(Error::invalid("sim.duration", format!("duration = {} must be positive", sim.duration)));
        }
        if !(sim.beta > 0.0 && sim.beta.is_finite()) {
            return Err(Error::invalid("sim.beta", format!("beta = {} must be positive", sim.beta)));
        }
        if sim.sample_stride == 0 {
            return Err(Error::invalid("sim.sample_stride", "stride must be at least 1"));
        }
        if let EstimatorKind::Signum { k_sgn } = sim.estimator {
            if !(k_sgn > 0.0 && k_sgn.is_finite()) {
                return Err(Error::invalid("sim.estimator.k_sgn", "k_sgn must be positive"));
            }
        }
        for (j, profile) in leaders.profiles.iter().enumerate() {
            profile.validate(j)?;
        }
        if !check_velocity_bound(&leaders.profiles, sim.beta, sim.duration) {
            let worst = leaders.profiles.iter().map(|p| p.max_speed(sim.duration)).fold(0.0, f64::max);
            return Err(Error::invalid(
                "velocity_bound",
                format!("leader speed reaches {worst} which exceeds beta = {}", sim.beta),
            ));
        }

        Ok(Self {
            followers: graph,
            observation,
            pattern,
            gains,
            leader_profiles: leaders.profiles,
            initial_follower_positions: follower_positions,
            initial_leader_positions: leader_positions,
            sim,
        })
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    Scenario::from_json_str(&text)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, scenario.to_json_string()).map_err(|source| Error::Io { path: path.to_owned(), source })
}

/// Angle normalized into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(TAU);
    if t > PI {
        t -= TAU;
    }
    t
}
