mod common;

use pooled_saa::benchmarks::{ks_solve, ks_worst_case};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn two_atom_instance_matches_lp() {
    let got = ks_worst_case(&[0.0, 1.0], 0.25, 1.0, 0.5, (0.0, 1.0)).unwrap();
    let lp = common::lp_worst_case(&[0.0, 1.0], 0.25, 1.0, 0.5, 0.0, 1.0, 0);
    assert!((got - lp).abs() < 1e-9, "{got} vs {lp}");
    // Moving a quarter of the mass from 1 to 0 costs 0.75 at x = 1.
    assert!((got - 0.75).abs() < 1e-12);
}

#[test]
fn worst_case_matches_lp_with_dense_atoms() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..40 {
        let n = rng.random_range(1..8);
        let samples: Vec<f64> = (0..n).map(|_| (rng.random_range(0.0..4.0f64) * 4.0).round() / 4.0).collect();
        let (lo, hi) = (-0.5, 4.5);
        let rho = rng.random_range(0.0..1.0);
        let s = rng.random_range(0.05..0.95);
        let x = rng.random_range(lo..hi);
        let got = ks_worst_case(&samples, rho, x, s, (lo, hi)).unwrap();
        let lp = common::lp_worst_case(&samples, rho, x, s, lo, hi, 40);
        assert!((got - lp).abs() < 1e-8, "samples={samples:?} rho={rho} x={x}: {got} vs {lp}");
    }
}

#[test]
fn solution_value_matches_lp_minimax_on_grid() {
    // The robust decision's worst-case value is no larger than the LP worst
    // case at any other decision on a grid.
    let samples = [1.0, 2.0, 2.0, 3.5, 4.0];
    let (rho, s) = (0.15, 0.7);
    let x = ks_solve(&samples, rho, s, (0.0, 5.0)).unwrap();
    let at_x = common::lp_worst_case(&samples, rho, x, s, 0.0, 5.0, 20);
    for i in 0..=100 {
        let t = i as f64 * 0.05;
        assert!(at_x <= common::lp_worst_case(&samples, rho, t, s, 0.0, 5.0, 20) + 1e-9, "t={t}");
    }
}
