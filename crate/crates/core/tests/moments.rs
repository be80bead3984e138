//! Reduced moment operators: projector structure, convergence to the group
//! twirl, the spectral gap and depth counts.

use lie_plateau::moments::{
    apply_gram, build_group_moment, build_layer_moment, depth_for_epsilon, lambda_max, lambda_max_with, LambdaOptions,
};
use lie_plateau::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vec(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn group_moment_is_a_projector_fixed_by_layers() {
    for n in 2..=6 {
        let group = build_group_moment(n).unwrap();
        let layer = build_layer_moment(n).unwrap();
        let c = random_vec(1 << n, n as u64);
        let g = group.apply(&c, Execution::Serial).unwrap();
        assert!(max_diff(&group.apply(&g, Execution::Serial).unwrap(), &g) < 1e-12);
        assert!(max_diff(&layer.apply(&g, Execution::Serial).unwrap(), &g) < 1e-12);
        assert!(max_diff(&group.apply(&layer.apply(&c, Execution::Serial).unwrap(), Execution::Serial).unwrap(), &g) < 1e-12);
    }
}

#[test]
fn deep_layers_converge_at_rate_lambda() {
    let n = 5;
    let layer = build_layer_moment(n).unwrap();
    let group = build_group_moment(n).unwrap();
    let lambda = lambda_max(n, 1e-10).unwrap();
    let mut c = random_vec(1 << n, 99);
    let target = group.apply(&c, Execution::Serial).unwrap();
    let mut prev = f64::INFINITY;
    let mut ratio = 0.0;
    for _ in 0..60 {
        c = layer.apply(&c, Execution::Serial).unwrap();
        let gap = max_diff(&c, &target);
        ratio = gap / prev;
        prev = gap;
    }
    assert!(prev < 1e-12 || (ratio - lambda).abs() < 1e-3, "ratio {ratio}, lambda {lambda}");
}

#[test]
fn dense_and_matrix_free_agree() {
    for n in [3, 6] {
        for op in [build_layer_moment(n).unwrap(), build_group_moment(n).unwrap()] {
            let dense = op.dense().unwrap();
            let c = random_vec(1 << n, 5);
            let via_dense: Vec<f64> = (&dense * nalgebra::DVector::from_vec(c.clone())).iter().copied().collect();
            assert!(max_diff(&via_dense, &op.apply(&c, Execution::Serial).unwrap()) < 1e-12);
        }
    }
}

#[test]
fn executors_agree_exactly() {
    let n = 14;
    let op = build_layer_moment(n).unwrap();
    let c = random_vec(1 << n, 17);
    assert_eq!(op.apply(&c, Execution::Serial).unwrap(), op.apply(&c, Execution::Parallel).unwrap());
    let (mut a, mut b) = (c.clone(), c);
    apply_gram(&mut a, Execution::Serial);
    apply_gram(&mut b, Execution::Parallel);
    assert_eq!(a, b);
}

#[test]
fn small_gaps_match_two_copy_oracle() {
    // Independent full 2-copy Weingarten propagation.
    for (n, want) in [(2, 0.0), (3, 0.16), (4, 0.32), (5, 0.41889)] {
        let got = lambda_max(n, 1e-10).unwrap();
        assert!((got - want).abs() < 1e-5, "n = {n}: {got}");
    }
    let a = lambda_max_with(8, &LambdaOptions { exec: Execution::Serial, ..LambdaOptions::default() }).unwrap();
    let b = lambda_max_with(8, &LambdaOptions { exec: Execution::Parallel, ..LambdaOptions::default() }).unwrap();
    assert!((a.value - b.value).abs() < 1e-12);
}

#[test]
fn gap_grows_with_n() {
    let values: Vec<f64> = [6, 8, 10, 12].iter().map(|&n| lambda_max(n, 1e-9).unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] > w[0]), "{values:?}");
    assert!(values.iter().all(|&v| v < 0.639));
}

#[test]
fn depth_counts() {
    assert_eq!(depth_for_epsilon(0.639, 1e-9).unwrap(), 47);
    assert_eq!(depth_for_epsilon(0.5, 0.25).unwrap(), 2);
    assert_eq!(depth_for_epsilon(0.0, 1e-9).unwrap(), 1);
    assert_eq!(depth_for_epsilon(0.16, 1e-9).unwrap(), 12);
    assert!(depth_for_epsilon(1.0, 0.1).is_err());
    assert!(depth_for_epsilon(0.5, 0.0).is_err());
}
