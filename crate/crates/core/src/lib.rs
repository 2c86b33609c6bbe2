//! Finite-time enclosing of multiple moving targets.
//!
//! A group of followers estimates the average position of a set of moving
//! leaders with a continuous distributed estimator, then circles that
//! estimate with a prescribed radius, angular spacing and rotation rate.
//! The crate contains the estimator, the enclosing controller, a fixed-step
//! closed-loop simulator and the post-run analysis used to check the
//! theoretical accuracy bounds.
//!
//! The runnable programs under `examples/` walk through each capability:
//!
//! ```text
//! cargo run --example bounds            # closed-form accuracy bounds
//! cargo run --example simulate          # full closed-loop run + report
//! cargo run --example compare_estimators
//! cargo run --example tune_estimator
//! cargo run --example closed_loop_properties
//! cargo run --example custom_scenario
//! ```

pub mod analysis;
pub mod cli;
pub mod controller;
pub mod engine;
pub mod error;
pub mod estimator;
pub mod scenario;
pub mod telemetry;
pub mod topology;

pub use error::{Error, Result};

/// Planar vector used for every position, velocity and control input.
pub type Vec2 = nalgebra::Vector2<f64>;

/// Bundled reference scenario (four followers, two leaders).
pub const REFERENCE_SCENARIO_JSON: &str = include_str!("../scenarios/reference.json");
