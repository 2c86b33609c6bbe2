//! Enclosing errors and the finite-time enclosing control law.
//!
//! Every follower measures its position relative to its own estimate of the
//! leaders' center, derives a radial error `z_i = rho'_i - rho_d` and a
//! normalized spacing error `delta_i = theta_bar'_i / a_i - 1`, and commands
//!
//! ```text
//! u_i = phi_i * w_z + phi_perp_i * w_delta + r_dot_i
//! w_z     = -k_z * z_i^(1/alpha2)
//! w_delta =  k_delta * delta_i^(1/alpha3) + w_d * rho'_i
//! ```
//!
//! The tangential rotation term is `w_d * rho'_i` so that the formation
//! turns at angular rate `w_d`; `wd_literal` switches to a constant
//! tangential speed `w_d`.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::scenario::{wrap_angle, Gains, SpacingPattern};
use crate::Vec2;

/// Radii below this are treated as sitting on the center.
pub const DEGENERATE_RADIUS: f64 = 1e-9;

/// Follower position relative to a center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeState {
    pub delta_p: Vec2,
    pub rho: f64,
    /// In `(-pi, pi]`.
    pub theta: f64,
    pub phi_unit: Vec2,
    pub phi_perp: Vec2,
}

impl RelativeState {
    /// Geometry of `p` about `center`, with no degeneracy check; at the
    /// center the angle defaults to zero.
    pub fn about(p: Vec2, center: Vec2) -> Self {
        let delta_p = p - center;
        let theta = wrap_angle(delta_p.y.atan2(delta_p.x));
        let (s, c) = theta.sin_cos();
        Self {
            delta_p,
            rho: delta_p.norm(),
            theta,
            phi_unit: Vec2::new(c, s),
            phi_perp: Vec2::new(-s, c),
        }
    }
}

/// Geometry of follower position `p` about its estimate `r`.
pub fn relative_state(p: Vec2, r: Vec2) -> Result<RelativeState> {
    let state = RelativeState::about(p, r);
    if state.rho < DEGENERATE_RADIUS {
        return Err(Error::DegenerateRadius { rho: state.rho });
    }
    Ok(state)
}

/// Counterclockwise angle from `theta_i` to `theta_succ`, in `[0, 2pi)`.
pub fn included_angle(theta_succ: f64, theta_i: f64) -> f64 {
    let diff = theta_succ - theta_i;
    let angle = if diff < 0.0 { diff + TAU } else { diff };
    // -tiny + 2pi can round to exactly 2pi
    if angle >= TAU {
        0.0
    } else {
        angle
    }
}

/// Cyclic order of followers around the center, fixed for a whole run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingOrder {
    successor: Vec<usize>,
}

impl RingOrder {
    /// Sorts by angle (ties by index) and closes the cycle.
    pub fn from_angles(thetas: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..thetas.len()).collect();
        order.sort_by(|&a, &b| thetas[a].total_cmp(&thetas[b]).then(a.cmp(&b)));
        let mut successor = vec![0; thetas.len()];
        for (k, &i) in order.iter().enumerate() {
            successor[i] = order[(k + 1) % order.len()];
        }
        Self { successor }
    }

    /// Builds an order from an explicit successor table, checking that it is
    /// a single cycle through every follower.
    pub fn from_successors(successor: Vec<usize>) -> Option<Self> {
        let n = successor.len();
        if n == 0 || successor.iter().any(|&s| s >= n) {
            return None;
        }
        let mut seen = vec![false; n];
        let mut i = 0;
        for _ in 0..n {
            if seen[i] {
                return None;
            }
            seen[i] = true;
            i = successor[i];
        }
        (i == 0).then_some(Self { successor })
    }

    pub fn successor(&self, i: usize) -> usize {
        self.successor[i]
    }

    pub fn len(&self) -> usize {
        self.successor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.successor.is_empty()
    }

    /// Followers in ring order starting at 0.
    pub fn cycle(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut i = 0;
        for _ in 0..self.len() {
            out.push(i);
            i = self.successor[i];
        }
        out
    }
}

/// Radial and angular-spacing errors of all followers.
#[derive(Debug, Clone, PartialEq)]
pub struct EnclosingErrors {
    pub z: Vec<f64>,
    pub delta: Vec<f64>,
    pub theta_bar: Vec<f64>,
}

impl EnclosingErrors {
    /// `sum theta_bar - 2pi`; nonzero once followers overtake each other.
    pub fn winding_residual(&self) -> f64 {
        self.theta_bar.iter().sum::<f64>() - TAU
    }
}

/// Spacing errors from per-follower angles; radii feed the `z` channel.
pub fn spacing_errors(rhos: &[f64], thetas: &[f64], order: &RingOrder, pattern: &SpacingPattern) -> EnclosingErrors {
    let n = thetas.len();
    let theta_bar: Vec<f64> = (0..n).map(|i| included_angle(thetas[order.successor(i)], thetas[i])).collect();
    EnclosingErrors {
        z: rhos.iter().map(|rho| rho - pattern.rho_d).collect(),
        delta: theta_bar.iter().zip(&pattern.a).map(|(tb, a)| tb / a - 1.0).collect(),
        theta_bar,
    }
}

/// Errors of every follower about its own estimate.
pub fn enclosing_errors(states: &[RelativeState], order: &RingOrder, pattern: &SpacingPattern) -> Result<EnclosingErrors> {
    if let Some(s) = states.iter().find(|s| s.rho < DEGENERATE_RADIUS) {
        return Err(Error::DegenerateRadius { rho: s.rho });
    }
    let rhos: Vec<f64> = states.iter().map(|s| s.rho).collect();
    let thetas: Vec<f64> = states.iter().map(|s| s.theta).collect();
    Ok(spacing_errors(&rhos, &thetas, order, pattern))
}

/// Control input of one follower.
pub fn control_input(
    state: &RelativeState,
    z: f64,
    delta: f64,
    gains: &Gains,
    w_d: f64,
    wd_literal: bool,
    r_dot: Vec2,
) -> Result<Vec2> {
    if state.rho < DEGENERATE_RADIUS {
        return Err(Error::DegenerateRadius { rho: state.rho });
    }
    let w_z = -gains.k_z * gains.alpha2.signed_root(z);
    let rotation = if wd_literal { w_d } else { w_d * state.rho };
    let w_delta = gains.k_delta * gains.alpha3.signed_root(delta) + rotation;
    Ok(state.phi_unit * w_z + state.phi_perp * w_delta + r_dot)
}

/// Command used while a follower sits on its estimated center: a fixed
/// radial kick along +x plus the feedforward.
pub fn escape_input(gains: &Gains, rho_d: f64, r_dot: Vec2) -> Vec2 {
    Vec2::new(gains.k_z * gains.alpha2.signed_root(rho_d), 0.0) + r_dot
}

/// Reduced radial error dynamics `z_dot = -(k_z / 2) z^(1/alpha2)`.
pub fn z_rate(z: &[f64], gains: &Gains) -> Vec<f64> {
    z.iter().map(|&zi| -0.5 * gains.k_z * gains.alpha2.signed_root(zi)).collect()
}

/// Settling-time bound of the radial channel,
/// `(2 alpha2 / (k_z (alpha2 - 1))) * V(0)^((alpha2 - 1) / (2 alpha2))` with
/// `V = 1/2 * sum z_i^2`.
pub fn t2_bound(z0: &[f64], gains: &Gains) -> f64 {
    let alpha = gains.alpha2.value();
    let v0 = 0.5 * z0.iter().map(|z| z * z).sum::<f64>();
    2.0 * alpha / (gains.k_z * (alpha - 1.0)) * v0.powf((alpha - 1.0) / (2.0 * alpha))
}

/// Reduced spacing error dynamics with frozen radii:
/// `delta_dot_i = -(k_delta / (a_i rho'_i)) (delta_i^(1/alpha3) - delta_succ^(1/alpha3))`.
pub fn delta_rate(delta: &[f64], rho: &[f64], a: &[f64], order: &RingOrder, gains: &Gains) -> Result<Vec<f64>> {
    if let Some(&r) = rho.iter().find(|r| **r < DEGENERATE_RADIUS) {
        return Err(Error::DegenerateRadius { rho: r });
    }
    let powered: Vec<f64> = delta.iter().map(|&d| gains.alpha3.signed_root(d)).collect();
    Ok((0..delta.len())
        .map(|i| -gains.k_delta / (a[i] * rho[i]) * (powered[i] - powered[order.successor(i)]))
        .collect())
}

/// Both reduced error fields at once.
pub fn closed_loop_rhs(
    z: &[f64],
    delta: &[f64],
    rho: &[f64],
    a: &[f64],
    order: &RingOrder,
    gains: &Gains,
) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((z_rate(z, gains), delta_rate(delta, rho, a, order, gains)?))
}
