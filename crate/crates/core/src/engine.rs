//! Fixed-step closed-loop simulation of leaders, estimators and followers.
//!
//! The coupled state is (leader positions, follower positions, estimator
//! internal states). Observations are recomputed from the leader positions
//! inside every integrator stage. In finite-difference feedforward mode the
//! observation rate is the backward difference between step boundaries, so
//! it stays causal and constant over a step.

use crate::analysis::{ControlTrace, RunLog, Sample};
use crate::controller::{control_input, escape_input, spacing_errors, RelativeState, RingOrder, DEGENERATE_RADIUS};
use crate::error::{Error, Result};
use crate::estimator::{continuous_update, local_observations, observation_rate, signum_update, EstimatorState};
use crate::scenario::{EstimatorKind, FeedforwardMode, Integrator, Scenario, VelocityProfile};
use crate::Vec2;

/// Any coordinate beyond this magnitude is treated as divergence.
pub const BLOWUP_LIMIT: f64 = 1e9;

pub fn leader_velocity(profile: &VelocityProfile, t: f64) -> Vec2 {
    profile.velocity(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub step: u64,
    pub t: f64,
    pub leaders: Vec<Vec2>,
    pub followers: Vec<Vec2>,
    pub estimator: EstimatorState,
}

/// Right-hand side evaluated at one point.
struct Rates {
    leaders: Vec<Vec2>,
    followers: Vec<Vec2>,
    phi: Vec<Vec2>,
}

/// Simulator bound to one scenario. The ring order is fixed at construction
/// from the followers' initial angles about their own estimates.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    scenario: &'a Scenario,
    order: RingOrder,
}

impl<'a> Simulator<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        let estimator = EstimatorState::new(&scenario.observation, &scenario.initial_leader_positions);
        let thetas: Vec<f64> = scenario
            .initial_follower_positions
            .iter()
            .zip(&estimator.r)
            .map(|(p, r)| RelativeState::about(*p, *r).theta)
            .collect();
        Self { scenario, order: RingOrder::from_angles(&thetas) }
    }

    /// Uses a caller-supplied ring order instead of the angular sort.
    pub fn with_order(scenario: &'a Scenario, order: RingOrder) -> Self {
        assert_eq!(order.len(), scenario.follower_count(), "ring order size mismatch");
        Self { scenario, order }
    }

    pub fn scenario(&self) -> &Scenario {
        self.scenario
    }

    pub fn order(&self) -> &RingOrder {
        &self.order
    }

    pub fn initial_state(&self) -> SwarmState {
        let s = self.scenario;
        SwarmState {
            step: 0,
            t: 0.0,
            leaders: s.initial_leader_positions.clone(),
            followers: s.initial_follower_positions.clone(),
            estimator: EstimatorState::new(&s.observation, &s.initial_leader_positions),
        }
    }

    fn held_observation_rate(&self, state: &SwarmState) -> Option<Vec<Vec2>> {
        match self.scenario.sim.feedforward_mode {
            FeedforwardMode::FiniteDifference => Some(observation_rate(
                &state.estimator,
                &self.scenario.observation,
                None,
                self.scenario.sim.dt,
                FeedforwardMode::FiniteDifference,
            )),
            FeedforwardMode::OracleVelocity => None,
        }
    }

    fn phi_rate(&self, r: &[Vec2]) -> Vec<Vec2> {
        let s = self.scenario;
        match s.sim.estimator {
            EstimatorKind::Continuous => continuous_update(r, &s.followers, &s.gains),
            EstimatorKind::Signum { k_sgn } => signum_update(r, &s.followers, k_sgn),
        }
    }

    fn evaluate(&self, t: f64, leaders: &[Vec2], followers: &[Vec2], phi: &[Vec2], held_rate: Option<&[Vec2]>) -> Rates {
        let s = self.scenario;
        let velocities: Vec<Vec2> = s.leader_profiles.iter().map(|p| leader_velocity(p, t)).collect();
        let p_tilde = local_observations(&s.observation, leaders);
        let r: Vec<Vec2> = phi.iter().zip(&p_tilde).map(|(f, p)| f + p).collect();
        let phi_dot = self.phi_rate(&r);
        let obs_rate = match held_rate {
            Some(rate) => rate.to_vec(),
            None => local_observations(&s.observation, &velocities),
        };
        let r_dot: Vec<Vec2> = phi_dot.iter().zip(&obs_rate).map(|(f, p)| f + p).collect();
        let controls = self.controls_from(followers, &r, &r_dot);
        Rates { leaders: velocities, followers: controls, phi: phi_dot }
    }

    fn controls_from(&self, followers: &[Vec2], r: &[Vec2], r_dot: &[Vec2]) -> Vec<Vec2> {
        let s = self.scenario;
        let rel: Vec<RelativeState> = followers.iter().zip(r).map(|(p, c)| RelativeState::about(*p, *c)).collect();
        let rhos: Vec<f64> = rel.iter().map(|x| x.rho).collect();
        let thetas: Vec<f64> = rel.iter().map(|x| x.theta).collect();
        let errors = spacing_errors(&rhos, &thetas, &self.order, &s.pattern);
        rel.iter()
            .enumerate()
            .map(|(i, state)| {
                if state.rho < DEGENERATE_RADIUS {
                    escape_input(&s.gains, s.pattern.rho_d, r_dot[i])
                } else {
                    control_input(state, errors.z[i], errors.delta[i], &s.gains, s.pattern.w_d, s.sim.wd_literal, r_dot[i])
                        .expect("radius checked above")
                }
            })
            .collect()
    }

    /// Control inputs the followers apply at `state`.
    pub fn controls(&self, state: &SwarmState) -> Vec<Vec2> {
        let held = self.held_observation_rate(state);
        self.evaluate(state.t, &state.leaders, &state.followers, &state.estimator.phi, held.as_deref())
            .followers
    }

    /// Advances one step of length `dt`.
    pub fn step(&self, state: &SwarmState) -> Result<SwarmState> {
        let s = self.scenario;
        let dt = s.sim.dt;
        let held = self.held_observation_rate(state);
        let held = held.as_deref();
        let t = state.t;
        let (l0, f0, p0) = (&state.leaders, &state.followers, &state.estimator.phi);

        let (leaders, followers, phi) = match s.sim.integrator {
            Integrator::Euler => {
                let k = self.evaluate(t, l0, f0, p0, held);
                (axpy(l0, dt, &k.leaders), axpy(f0, dt, &k.followers), axpy(p0, dt, &k.phi))
            }
            Integrator::Rk4 => {
                let k1 = self.evaluate(t, l0, f0, p0, held);
                let h = 0.5 * dt;
                let k2 = self.evaluate(t + h, &axpy(l0, h, &k1.leaders), &axpy(f0, h, &k1.followers), &axpy(p0, h, &k1.phi), held);
                let k3 = self.evaluate(t + h, &axpy(l0, h, &k2.leaders), &axpy(f0, h, &k2.followers), &axpy(p0, h, &k2.phi), held);
                let k4 = self.evaluate(t + dt, &axpy(l0, dt, &k3.leaders), &axpy(f0, dt, &k3.followers), &axpy(p0, dt, &k3.phi), held);
                let combine = |x: &[Vec2], a: &[Vec2], b: &[Vec2], c: &[Vec2], d: &[Vec2]| -> Vec<Vec2> {
                    (0..x.len()).map(|i| x[i] + (a[i] + (b[i] + c[i]) * 2.0 + d[i]) * (dt / 6.0)).collect()
                };
                (
                    combine(l0, &k1.leaders, &k2.leaders, &k3.leaders, &k4.leaders),
                    combine(f0, &k1.followers, &k2.followers, &k3.followers, &k4.followers),
                    combine(p0, &k1.phi, &k2.phi, &k3.phi, &k4.phi),
                )
            }
        };

        let step = state.step + 1;
        let t_next = step as f64 * dt;
        let diverged = leaders
            .iter()
            .chain(&followers)
            .chain(&phi)
            .flat_map(|v| v.iter())
            .any(|x| !x.is_finite() || x.abs() > BLOWUP_LIMIT);
        if diverged {
            return Err(Error::NumericalBlowup { t: t_next });
        }
        let estimator = state.estimator.advance(phi, &s.observation, &leaders);
        Ok(SwarmState { step, t: t_next, leaders, followers, estimator })
    }

    /// Runs from the initial state to `horizon`, logging every
    /// `sample_stride`-th step and the final step.
    pub fn run_until(&self, horizon: f64) -> Result<RunLog> {
        self.drive(horizon, None)
    }

    pub fn run(&self) -> Result<RunLog> {
        self.run_until(self.scenario.sim.duration)
    }

    /// Full-horizon run that also keeps the control input of every
    /// integration step, independent of the logging stride.
    pub fn run_recording_controls(&self) -> Result<(RunLog, ControlTrace)> {
        let mut trace = ControlTrace::new(self.scenario.follower_count());
        let log = self.drive(self.scenario.sim.duration, Some(&mut trace))?;
        Ok((log, trace))
    }

    fn drive(&self, horizon: f64, mut trace: Option<&mut ControlTrace>) -> Result<RunLog> {
        let s = self.scenario;
        let stride = s.sim.sample_stride as u64;
        // whole steps that fit in the horizon, tolerant of rounding in horizon / dt
        let steps = (horizon / s.sim.dt + 1e-6).floor().max(0.0) as u64;
        let mut log = RunLog::new(s, &self.order);
        let mut state = self.initial_state();
        let u = self.controls(&state);
        if let Some(trace) = trace.as_deref_mut() {
            trace.push(state.t, &u);
        }
        log.push(Sample::capture(s, &self.order, &state, &u));
        for k in 1..=steps {
            state = self.step(&state)?;
            let logged = k % stride == 0 || k == steps;
            if logged || trace.is_some() {
                let u = self.controls(&state);
                if let Some(trace) = trace.as_deref_mut() {
                    trace.push(state.t, &u);
                }
                if logged {
                    log.push(Sample::capture(s, &self.order, &state, &u));
                }
            }
        }
        Ok(log)
    }
}

fn axpy(x: &[Vec2], h: f64, d: &[Vec2]) -> Vec<Vec2> {
    x.iter().zip(d).map(|(a, b)| a + b * h).collect()
}

/// Simulates `scenario` over its full horizon.
pub fn run(scenario: &Scenario) -> Result<RunLog> {
    Simulator::new(scenario).run()
}
