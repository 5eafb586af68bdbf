mod common;

use common::grad::*;

fn assert_case(case: Case, name: &str) {
    for seed in SEEDS {
        let err = case(seed);
        assert!(err < TOLERANCE, "{name} seed {seed}: max relative error {err:e}");
    }
}

#[test]
fn conv2d_gradients() {
    assert_case(conv_case, "conv2d");
}

#[test]
fn maxpool_gradients() {
    assert_case(pool_case, "maxpool");
}

#[test]
fn batchnorm_gradients() {
    assert_case(batchnorm_case, "batchnorm");
}

#[test]
fn dense_gradients() {
    assert_case(dense_case, "dense");
}

#[test]
fn softmax_cross_entropy_gradients() {
    assert_case(softmax_ce_case, "softmax+ce");
}

#[test]
fn whole_model_gradients() {
    assert_case(model_case, "model");
}

#[test]
fn relative_error_floor() {
    assert_eq!(rel_err(1.0, 1.0), 0.0);
    assert!((rel_err(2.0, 1.0) - 0.5).abs() < 1e-15);
    // Both below the floor: compared on an absolute scale.
    assert!(rel_err(1e-12, -1e-12) < 1e-5);
}
