//! Pick the estimator exponent `alpha1 = p/q` for an accuracy and settling target.
//!
//! `cargo run --example tune_estimator -- [epsilon_d] [t1_d]`

use enclosing::cli::initial_errors;
use enclosing::estimator::{theoretical_bounds, tune_alpha1, TuningTarget};
use enclosing::scenario::{OddRatio, Scenario};

/// Smallest odd ratio with a small denominator strictly above `lower`.
fn odd_ratio_above(lower: f64) -> OddRatio {
    let mut best: Option<OddRatio> = None;
    for q in (1..=9).step_by(2) {
        let mut p = q + 2;
        while (p as f64) / (q as f64) <= lower.max(1.0) {
            p += 2;
        }
        let r = OddRatio::new(p, q);
        if best.is_none_or(|b| r.value() < b.value()) {
            best = Some(r);
        }
    }
    best.unwrap()
}

fn main() -> enclosing::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>().expect("numeric argument"));
    let epsilon_d = args.next().unwrap_or(1e-3);
    let t1_d = args.next().unwrap_or(0.01);

    let s = Scenario::reference();
    let (v1_0, _) = initial_errors(&s);
    let target = TuningTarget {
        epsilon_d,
        t1_d,
        beta: s.beta(),
        k_e: s.gains.k_e,
        n: s.follower_count(),
        eta: s.gains.eta,
        v1_0,
    };
    let lower = tune_alpha1(&target)?;
    let ratio = odd_ratio_above(lower);
    println!("alpha1 must exceed {lower:.4}; choose {}/{}", ratio.p, ratio.q);

    let mut gains = s.gains.clone();
    gains.alpha1 = ratio;
    let b = theoretical_bounds(s.beta(), &gains, s.follower_count(), v1_0)?;
    println!("resulting epsilon = {:.3e} (target {epsilon_d:.1e})", b.epsilon);
    Ok(())
}
