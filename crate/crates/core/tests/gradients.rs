//! Analytic gradients against central finite differences.

mod common;

#[test]
fn graph_net_gradient_matches_finite_differences() {
    for seed in 0..10 {
        let err = common::gnn_gradient_error(seed, 1e-5, usize::MAX);
        assert!(err < 1e-4, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn fusion_head_gradient_matches_finite_differences() {
    for seed in 0..10 {
        let err = common::head_gradient_error(seed, 1e-5);
        assert!(err < 1e-4, "seed {seed}: relative error {err:e}");
    }
}
