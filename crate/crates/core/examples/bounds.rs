//! Closed-form accuracy and settling bounds for the bundled scenario, and
//! how the estimator accuracy moves with the gain `k_e`.

use enclosing::analysis::epsilon_delta;
use enclosing::cli::initial_errors;
use enclosing::controller::t2_bound;
use enclosing::estimator::theoretical_bounds;
use enclosing::scenario::Scenario;

fn main() -> enclosing::Result<()> {
    let s = Scenario::reference();
    let n = s.follower_count();
    let (v1_0, z0) = initial_errors(&s);
    let b = theoretical_bounds(s.beta(), &s.gains, n, v1_0)?;

    println!("n = {n}, beta = {:.6}, V1(0) = {v1_0:.4}", s.beta());
    println!("f             = {:.6e}", b.f_value);
    println!("epsilon       = {:.6}", b.epsilon);
    println!("epsilon_delta = {:.6}", epsilon_delta(b.epsilon, &s.pattern));
    println!("T1 bound      = {:.4e} s", b.t1_bound);
    println!("T2 bound      = {:.4} s  (z0 = {z0:.3?})", t2_bound(&z0, &s.gains));

    println!("\n  k_e   epsilon");
    for k_e in [5.0, 6.0, 8.0, 12.0, 24.0] {
        let mut g = s.gains.clone();
        g.k_e = k_e;
        match theoretical_bounds(s.beta(), &g, n, v1_0) {
            Ok(b) => println!("{k_e:5.1}   {:.3e}", b.epsilon),
            Err(e) => println!("{k_e:5.1}   {e}"),
        }
    }
    Ok(())
}
