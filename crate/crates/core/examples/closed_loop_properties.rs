//! The reduced error dynamics on their own: finite-time settling of the
//! radial channel against its bound, and the spacing Lyapunov functions.

use std::f64::consts::TAU;

use enclosing::controller::{delta_rate, t2_bound, z_rate, RingOrder};
use enclosing::scenario::Scenario;

fn rk4(x: &[f64], h: f64, f: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let shift = |k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let k1 = f(x);
    let k2 = f(&shift(&k1, h / 2.0));
    let k3 = f(&shift(&k2, h / 2.0));
    let k4 = f(&shift(&k3, h));
    (0..x.len()).map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn main() -> enclosing::Result<()> {
    let g = Scenario::reference().gains;

    let z0 = [12.0, -7.5, 3.0, 20.0];
    let mut z = z0.to_vec();
    let mut t = 0.0;
    while max_abs(&z) > 1e-6 {
        let h = 1e-3 * max_abs(&z).powf(2.0 / 3.0).min(1.0);
        z = rk4(&z, h, |x| z_rate(x, &g));
        t += h;
    }
    let doubled: Vec<f64> = z0.iter().map(|v| v * 2f64.sqrt()).collect();
    println!("radial channel from {z0:?}");
    println!("  settled at {t:.4} s, T2 = {:.4} s, T2 with V = sum z^2: {:.4} s", t2_bound(&z0, &g), t2_bound(&doubled, &g));

    let a: Vec<f64> = [1.0, 1.0, 1.0, 2.0].iter().map(|w| w / 5.0 * TAU).collect();
    let rho = [8.0; 4];
    let order = RingOrder::from_successors(vec![1, 2, 3, 0]).expect("ring");
    // balanced: sum a_i delta_i = 0
    let mut delta = vec![0.6, -0.3, 0.2, -0.25];
    let weighted = |d: &[f64]| d.iter().zip(&a).map(|(x, w)| w * 8.0 * x.abs().powf(4.0 / 3.0)).sum::<f64>();
    let plain = |d: &[f64]| d.iter().map(|x| x.abs().powf(4.0 / 3.0)).sum::<f64>();
    println!("spacing channel, a = {a:.3?}");
    println!("      t   max|delta|   sum|d|^(4/3)   sum a rho |d|^(4/3)");
    for step in 0..=4000 {
        if step % 500 == 0 {
            let t = step as f64 * 1e-3;
            println!("{t:7.2}   {:.3e}    {:.4e}     {:.4e}", max_abs(&delta), plain(&delta), weighted(&delta));
        }
        delta = rk4(&delta, 1e-3, |d| delta_rate(d, &rho, &a, &order, &g).expect("radius"));
    }
    Ok(())
}
