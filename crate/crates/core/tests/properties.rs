use std::f64::consts::{PI, TAU};

use enclosing::analysis::dithering_metric;
use enclosing::controller::{delta_rate, included_angle, spacing_errors, t2_bound, z_rate, RingOrder};
use enclosing::estimator::{continuous_update, local_observations, signed_pow, signum_update};
use enclosing::scenario::{wrap_angle, Gains, OddRatio, Scenario, SpacingPattern};
use enclosing::topology::{is_connected, FollowerGraph, ObservationGraph};
use enclosing::Vec2;
use proptest::prelude::*;

fn gains() -> Gains {
    Scenario::reference().gains
}

/// Symmetric 0/1 adjacency from the upper-triangle bits.
fn graph_from_bits(n: usize, bits: &[bool]) -> FollowerGraph {
    let mut adj = vec![vec![0u8; n]; n];
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            if bits[k % bits.len()] {
                adj[i][j] = 1;
                adj[j][i] = 1;
            }
            k += 1;
        }
    }
    FollowerGraph::new(adj).unwrap()
}

/// Rank of the graph Laplacian by Gaussian elimination with partial pivoting.
fn laplacian_rank(g: &FollowerGraph) -> usize {
    let n = g.node_count();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { g.neighbors(i).len() as f64 } else { -g.weight(i, j) }).collect())
        .collect();
    let mut rank = 0;
    for col in 0..n {
        let Some(pivot) = (rank..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())) else { break };
        if m[pivot][col].abs() < 1e-9 {
            continue;
        }
        m.swap(rank, pivot);
        for row in 0..n {
            if row != rank {
                let f = m[row][col] / m[rank][col];
                for c in col..n {
                    m[row][c] -= f * m[rank][c];
                }
            }
        }
        rank += 1;
    }
    rank
}

fn points(coords: &[(f64, f64)]) -> Vec<Vec2> {
    coords.iter().map(|&(x, y)| Vec2::new(x, y)).collect()
}

fn odd_ratio() -> impl Strategy<Value = OddRatio> {
    (1u32..8, 0u32..8).prop_filter_map("p > q", |(a, b)| {
        let (p, q) = (2 * a + 1, 2 * b + 1);
        (p > q).then_some(OddRatio::new(p, q))
    })
}

fn balanced(delta: &[f64], a: &[f64]) -> Vec<f64> {
    let k = a.iter().zip(delta).map(|(x, y)| x * y).sum::<f64>() / a.iter().map(|x| x * x).sum::<f64>();
    delta.iter().zip(a).map(|(y, x)| y - k * x).collect()
}

fn normalized(raw: &[f64]) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total * TAU).collect()
}

/// Weighted spacing Lyapunov function `sum a_i rho_i |delta_i|^(1 + 1/alpha3)`.
fn weighted_v2(delta: &[f64], a: &[f64], rho: &[f64], exponent: f64) -> f64 {
    delta.iter().zip(a).zip(rho).map(|((d, a), r)| a * r * d.abs().powf(exponent)).sum()
}

// below this the fixed-step map chatters around the non-Lipschitz origin
const CHATTER_FLOOR: f64 = 1e-2;

fn above_floor(delta: &[f64]) -> bool {
    delta.iter().any(|d| d.abs() > CHATTER_FLOOR)
}

fn rk4(x: &[f64], h: f64, f: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let shift = |k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let k1 = f(x);
    let k2 = f(&shift(&k1, h / 2.0));
    let k3 = f(&shift(&k2, h / 2.0));
    let k4 = f(&shift(&k3, h));
    (0..x.len()).map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

proptest! {
    #[test]
    fn signed_pow_is_odd_and_monotone(x in -1e3f64..1e3, y in -1e3f64..1e3, ratio in odd_ratio()) {
        let e = ratio.inverse();
        prop_assert_eq!(signed_pow(-x, e), -signed_pow(x, e));
        if x < y {
            prop_assert!(signed_pow(x, e) <= signed_pow(y, e));
        }
        prop_assert_eq!(ratio.signed_root(x), signed_pow(x, e));
    }

    #[test]
    fn coupling_sums_to_zero(
        n in 2usize..8,
        bits in prop::collection::vec(any::<bool>(), 28),
        coords in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 8),
        k_sgn in 0.1f64..10.0,
    ) {
        let g = graph_from_bits(n, &bits);
        let r = points(&coords[..n]);
        let total: Vec2 = continuous_update(&r, &g, &gains()).iter().sum();
        prop_assert!(total.norm() < 1e-12, "continuous sum {}", total.norm());
        let total: Vec2 = signum_update(&r, &g, k_sgn).iter().sum();
        prop_assert!(total.norm() < 1e-12, "signum sum {}", total.norm());
    }

    #[test]
    fn observation_sum_is_n_times_lap(
        n in 1usize..7,
        m in 1usize..4,
        bits in prop::collection::vec(any::<bool>(), 24),
        coords in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 4),
    ) {
        let mut edges = vec![vec![0u8; n]; m];
        for (j, row) in edges.iter_mut().enumerate() {
            for (i, w) in row.iter_mut().enumerate() {
                *w = u8::from(bits[(j * n + i) % bits.len()]);
            }
            row[j % n] = 1;
        }
        let obs = ObservationGraph::new(edges, n).unwrap();
        let leaders = points(&coords[..m]);
        let total: Vec2 = local_observations(&obs, &leaders).iter().sum();
        let lap = leaders.iter().sum::<Vec2>() / m as f64;
        prop_assert!((total - lap * n as f64).norm() < 1e-9);
    }

    #[test]
    fn connectivity_matches_laplacian_rank(n in 1usize..9, bits in prop::collection::vec(prop::bool::weighted(0.3), 36)) {
        let g = graph_from_bits(n, &bits);
        prop_assert_eq!(is_connected(&g), laplacian_rank(&g) == n - 1);
    }

    #[test]
    fn wrapped_angles_stay_in_half_open_interval(theta in -100.0f64..100.0) {
        let w = wrap_angle(theta);
        prop_assert!(w > -PI && w <= PI);
        let turns = (theta - w) / TAU;
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn sorted_ring_winds_once(thetas in prop::collection::vec(-PI..PI, 2..9)) {
        let order = RingOrder::from_angles(&thetas);
        let total: f64 = (0..thetas.len()).map(|i| included_angle(thetas[order.successor(i)], thetas[i])).sum();
        let distinct = thetas.iter().any(|t| *t != thetas[0]);
        if distinct {
            prop_assert!((total - TAU).abs() < 1e-9, "total {total}");
        }
        for i in 0..thetas.len() {
            let gap = included_angle(thetas[order.successor(i)], thetas[i]);
            prop_assert!((0.0..TAU).contains(&gap));
        }
    }

    #[test]
    fn spacing_errors_are_balanced(raw in prop::collection::vec(0.2f64..1.0, 2..8), offset in -PI..PI) {
        // followers placed at cumulative angles of a random pattern, then perturbed
        let a = normalized(&raw);
        let pattern = SpacingPattern { rho_d: 5.0, w_d: 0.1, a: a.clone() };
        let mut theta = offset;
        let mut thetas = Vec::new();
        for (k, gap) in a.iter().enumerate() {
            thetas.push(wrap_angle(theta + 0.1 * gap * (k as f64).sin()));
            theta += gap;
        }
        let order = RingOrder::from_successors((0..a.len()).map(|i| (i + 1) % a.len()).collect()).unwrap();
        let errors = spacing_errors(&vec![5.0; a.len()], &thetas, &order, &pattern);
        let weighted: f64 = errors.delta.iter().zip(&a).map(|(d, a)| d * a).sum();
        prop_assert!(weighted.abs() < 1e-9, "a^T delta = {weighted}");
    }

    #[test]
    fn total_variation_bounds(trace in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..50)) {
        let u = points(&trace);
        let d = dithering_metric(std::slice::from_ref(&u))[0];
        prop_assert!(d.total_variation + 1e-12 >= d.max_jump);
        prop_assert!(d.total_variation + 1e-9 >= (u[u.len() - 1] - u[0]).norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weighted_spacing_lyapunov_never_increases(
        raw in prop::collection::vec(0.2f64..1.0, 3..8),
        rho in prop::collection::vec(1.0f64..20.0, 8),
        seed in prop::collection::vec(-1.0f64..1.0, 8),
    ) {
        let n = raw.len();
        let a = normalized(&raw);
        let rho = &rho[..n];
        let order = RingOrder::from_successors((0..n).map(|i| (i + 1) % n).collect()).unwrap();
        let g = gains();
        let exponent = 1.0 + g.alpha3.inverse();
        let mut delta = balanced(&seed[..n], &a);
        let mut v = weighted_v2(&delta, &a, rho, exponent);
        for _ in 0..4000 {
            if !above_floor(&delta) {
                break;
            }
            delta = rk4(&delta, 2e-3, |d| delta_rate(d, rho, &a, &order, &g).unwrap());
            let next = weighted_v2(&delta, &a, rho, exponent);
            prop_assert!(next <= v * (1.0 + 1e-9) + 1e-15, "{next} > {v}");
            v = next;
        }
    }

    #[test]
    fn radial_channel_settles_within_doubled_energy_bound(z0 in prop::collection::vec(-30.0f64..30.0, 1..8)) {
        // closed form per component: |z|^(2/3) falls at rate k_z / 3
        let g = gains();
        let settle = z0.iter().map(|z| 3.0 / g.k_z * z.abs().powf(2.0 / 3.0)).fold(0.0, f64::max);
        let doubled: Vec<f64> = z0.iter().map(|z| z * 2f64.sqrt()).collect();
        // V(0) = sum z^2 in place of 1/2 sum z^2
        prop_assert!(settle <= t2_bound(&doubled, &g) * (1.0 + 1e-12));
    }
}

#[test]
fn unweighted_spacing_lyapunov_can_increase() {
    // one narrow sector next to wide ones: the plain sum of |delta|^(4/3) grows
    let g = gains();
    let a = normalized(&[2.3475, 2.3555, 1.52, 0.0602]);
    let rho = [8.0; 4];
    let order = RingOrder::from_successors(vec![1, 2, 3, 0]).unwrap();
    let exponent = 1.0 + g.alpha3.inverse();
    let plain = |d: &[f64]| d.iter().map(|x| x.abs().powf(exponent)).sum::<f64>();
    let delta = balanced(&[0.6632, -0.4832, -0.2885, 0.3302], &a);
    let next = rk4(&delta, 1e-3, |d| delta_rate(d, &rho, &a, &order, &g).unwrap());
    assert!(plain(&next) > plain(&delta), "{} -> {}", plain(&delta), plain(&next));
    let weighted = |d: &[f64]| weighted_v2(d, &a, &rho, exponent);
    assert!(weighted(&next) < weighted(&delta));
}

#[test]
fn uniform_pattern_lyapunov_decreases() {
    let g = gains();
    let n = 5;
    let a = vec![TAU / n as f64; n];
    let rho = vec![8.0; n];
    let order = RingOrder::from_successors((0..n).map(|i| (i + 1) % n).collect()).unwrap();
    let exponent = 1.0 + g.alpha3.inverse();
    let plain = |d: &[f64]| d.iter().map(|x| x.abs().powf(exponent)).sum::<f64>();
    let mut delta = balanced(&[0.7, -0.2, 0.4, -0.9, 0.1], &a);
    let mut steps = 0;
    while above_floor(&delta) {
        let next = rk4(&delta, 2e-3, |d| delta_rate(d, &rho, &a, &order, &g).unwrap());
        assert!(plain(&next) <= plain(&delta) * (1.0 + 1e-12), "{} -> {}", plain(&delta), plain(&next));
        delta = next;
        steps += 1;
    }
    assert!(steps > 100);
}

#[test]
fn radial_rate_matches_closed_form_solution() {
    // |z(t)|^(2/3) = |z0|^(2/3) - (k_z / 3) t for z_dot = -(k_z/2) z^(1/3)
    let g = gains();
    let z0 = 27.0;
    let mut z = vec![z0];
    let h = 1e-4;
    let t_end = 3.0;
    for _ in 0..(t_end / h) as usize {
        z = rk4(&z, h, |x| z_rate(x, &g));
    }
    let expected = (z0.powf(2.0 / 3.0) - g.k_z / 3.0 * t_end).powf(1.5);
    assert!((z[0] - expected).abs() < 1e-8, "{} vs {expected}", z[0]);
}
