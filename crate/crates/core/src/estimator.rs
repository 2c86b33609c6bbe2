//! Distributed estimation of the leaders' average position.
//!
//! Each follower `i` keeps an internal state `phi_i` and publishes the
//! estimate `r_i = phi_i + p~_i`, where `p~_i` is a weighted sum of the
//! leader positions it observes. The weights are chosen so that the
//! observations of all followers sum to `n` times the true average, hence
//! with `phi(0) = 0` and an antisymmetric coupling the mean of the
//! estimates equals the true average at all times.
//!
//! Two couplings are provided: the continuous fractional-power law
//! ([`continuous_update`]) and the discontinuous unit-vector baseline
//! ([`signum_update`]).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::{FeedforwardMode, Gains};
use crate::topology::{observer_count, FollowerGraph, ObservationGraph};
use crate::Vec2;

/// `sign(x) * |x|^exponent`. Continuous, odd and increasing for positive
/// exponents; zero maps to zero.
pub fn signed_pow(x: f64, exponent: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    x.signum() * x.abs().powf(exponent)
}

fn signed_pow_vec(v: Vec2, exponent: f64) -> Vec2 {
    v.map(|c| signed_pow(c, exponent))
}

/// Local observation of follower `i`: `(n/m) * sum_j p_j / |N_j^F|` over the
/// leaders it sees.
pub fn local_observation(obs: &ObservationGraph, leader_positions: &[Vec2], follower: usize) -> Vec2 {
    let n = obs.follower_count() as f64;
    let m = obs.leader_count() as f64;
    let sum: Vec2 = obs
        .observed_leaders(follower)
        .map(|j| leader_positions[j] / observer_count(obs, j) as f64)
        .sum();
    sum * (n / m)
}

/// [`local_observation`] for every follower. The map is linear, so passing
/// leader velocities yields the observation rates.
pub fn local_observations(obs: &ObservationGraph, leader_positions: &[Vec2]) -> Vec<Vec2> {
    (0..obs.follower_count()).map(|i| local_observation(obs, leader_positions, i)).collect()
}

/// Internal estimator state of all followers.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub phi: Vec<Vec2>,
    pub r: Vec<Vec2>,
    pub p_tilde: Vec<Vec2>,
    /// Observation at the previous step; `None` before the first step.
    pub p_tilde_prev: Option<Vec<Vec2>>,
}

impl EstimatorState {
    /// Zero internal state, so every estimate starts at its own observation.
    pub fn new(obs: &ObservationGraph, leader_positions: &[Vec2]) -> Self {
        let p_tilde = local_observations(obs, leader_positions);
        Self {
            phi: vec![Vec2::zeros(); p_tilde.len()],
            r: p_tilde.clone(),
            p_tilde,
            p_tilde_prev: None,
        }
    }

    /// Rebuilds the state after `phi` and the leaders advanced one step.
    pub fn advance(&self, phi: Vec<Vec2>, obs: &ObservationGraph, leader_positions: &[Vec2]) -> Self {
        let p_tilde = local_observations(obs, leader_positions);
        let r = phi.iter().zip(&p_tilde).map(|(f, p)| f + p).collect();
        Self { phi, r, p_tilde, p_tilde_prev: Some(self.p_tilde.clone()) }
    }
}

/// Continuous coupling: `k_e * sum_j a_ij (r_j - r_i)^(1/alpha1)`, applied
/// componentwise.
pub fn continuous_update(r: &[Vec2], g: &FollowerGraph, gains: &Gains) -> Vec<Vec2> {
    let exponent = gains.alpha1.inverse();
    (0..r.len())
        .map(|i| {
            g.neighbors(i)
                .iter()
                .map(|&j| signed_pow_vec(r[j] - r[i], exponent) * g.weight(i, j))
                .sum::<Vec2>()
                * gains.k_e
        })
        .collect()
}

/// Discontinuous baseline: `k_sgn * sum_j (r_j - r_i) / |r_j - r_i|`, with a
/// zero contribution from coincident neighbors.
pub fn signum_update(r: &[Vec2], g: &FollowerGraph, k_sgn: f64) -> Vec<Vec2> {
    (0..r.len())
        .map(|i| {
            g.neighbors(i)
                .iter()
                .map(|&j| {
                    let d = r[j] - r[i];
                    let norm = d.norm();
                    if norm == 0.0 {
                        Vec2::zeros()
                    } else {
                        d / norm
                    }
                })
                .sum::<Vec2>()
                * k_sgn
        })
        .collect()
}

/// Baseline gain used for comparisons: 5% above `beta (n - 1)`.
pub fn baseline_signum_gain(beta: f64, n: usize) -> f64 {
    1.05 * beta * (n as f64 - 1.0)
}

/// Estimate rate `r_dot_i = phi_dot_i + d p~_i / dt`.
///
/// In finite-difference mode the observation rate is the backward difference
/// of the stored observations (zero before the first step). In oracle mode it
/// is computed from the true leader velocities, which must then be given.
pub fn r_derivative(
    state: &EstimatorState,
    phi_dot: &[Vec2],
    obs: &ObservationGraph,
    leader_velocities: Option<&[Vec2]>,
    dt: f64,
    mode: FeedforwardMode,
) -> Vec<Vec2> {
    let rates = observation_rate(state, obs, leader_velocities, dt, mode);
    phi_dot.iter().zip(rates).map(|(f, p)| f + p).collect()
}

pub(crate) fn observation_rate(
    state: &EstimatorState,
    obs: &ObservationGraph,
    leader_velocities: Option<&[Vec2]>,
    dt: f64,
    mode: FeedforwardMode,
) -> Vec<Vec2> {
    match mode {
        FeedforwardMode::FiniteDifference => match &state.p_tilde_prev {
            Some(prev) => state.p_tilde.iter().zip(prev).map(|(now, before)| (now - before) / dt).collect(),
            None => vec![Vec2::zeros(); state.p_tilde.len()],
        },
        FeedforwardMode::OracleVelocity => {
            let v = leader_velocities.expect("oracle feedforward needs leader velocities");
            local_observations(obs, v)
        }
    }
}

/// `V1 = 1/2 * sum_{i,j} |r_i - r_j|^2`.
pub fn disagreement(r: &[Vec2]) -> f64 {
    let mut total = 0.0;
    for (i, ri) in r.iter().enumerate() {
        for rj in &r[i + 1..] {
            total += (ri - rj).norm_squared();
        }
    }
    total
}

/// Closed-form accuracy and settling bounds of the continuous estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorBounds {
    /// Terminal level of the disagreement `V1`.
    pub f_value: f64,
    /// Accuracy bound on `|r_i - p_bar|`; the square root of `f_value`.
    pub epsilon: f64,
    /// Upper bound on the time to enter `V1 <= f_value`.
    pub t1_bound: f64,
}

/// `f = ((eta + 2 n beta) / (n k_e))^(2 alpha1)`, `epsilon = sqrt(f)` and
/// `T1 <= 2 (sqrt(V1(0)) - sqrt(f)) / eta`.
pub fn theoretical_bounds(beta: f64, gains: &Gains, n: usize, v1_0: f64) -> Result<EstimatorBounds> {
    let n = n as f64;
    let lhs = n * gains.k_e;
    let rhs = gains.eta + 2.0 * n * beta;
    if lhs <= rhs {
        return Err(Error::GainTooSmall { lhs, rhs });
    }
    let ratio = rhs / lhs;
    let alpha1 = gains.alpha1.value();
    let epsilon = ratio.powf(alpha1);
    let f_value = ratio.powf(2.0 * alpha1);
    let t1_bound = (2.0 * (v1_0.sqrt() - epsilon) / gains.eta).max(0.0);
    Ok(EstimatorBounds { f_value, epsilon, t1_bound })
}

/// Inputs for choosing the estimator exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningTarget {
    /// Desired accuracy.
    pub epsilon_d: f64,
    /// Desired settling time (s).
    pub t1_d: f64,
    pub beta: f64,
    pub k_e: f64,
    pub n: usize,
    pub eta: f64,
    /// Initial disagreement `V1(0)`.
    pub v1_0: f64,
}

/// Lower bound on `alpha1` from the accuracy and settling-time targets.
/// The caller picks an odd ratio above it.
pub fn tune_alpha1(target: &TuningTarget) -> Result<f64> {
    let n = target.n as f64;
    let lhs = n * target.k_e;
    let rhs = target.eta + 2.0 * n * target.beta;
    if lhs <= rhs {
        return Err(Error::GainTooSmall { lhs, rhs });
    }
    if !(target.epsilon_d > 0.0) {
        return Err(Error::Infeasible(format!("epsilon_d = {} must be positive", target.epsilon_d)));
    }
    let denom = rhs.ln() - lhs.ln();
    let accuracy = target.epsilon_d.ln() / denom;
    let arg = target.v1_0.sqrt() - target.t1_d * n * (target.k_e - 2.0 * target.beta) / 2.0;
    if !(arg > 0.0) {
        return Err(Error::Infeasible(format!(
            "settling-time constraint has non-positive log argument {arg}"
        )));
    }
    let settling = arg.ln() / denom;
    Ok(accuracy.max(settling))
}
