mod common;

use heda_core::harness::{separable_dataset, Dataset};
use heda_core::training::{accuracy, gradient, log_loss, plaintext_lr_train, sigmoid, Hyperparams};
use proptest::prelude::*;

use common::finite_difference_case;

#[test]
fn gradient_matches_central_differences() {
    for seed in 0..100 {
        let err = finite_difference_case(seed);
        assert!(err <= 1e-6, "instance {seed}: relative error {err}");
    }
}

#[test]
fn separable_data_is_fit_exactly() {
    let data = separable_dataset(200, 3, 2);
    let hyper = Hyperparams {
        alpha: 1.0,
        cycles: 500,
        threshold: 0.0,
    };
    let out = plaintext_lr_train(&data, &hyper).unwrap();
    assert_eq!(accuracy(&out.model.beta, &data), 1.0);
}

proptest! {
    #[test]
    fn sigmoid_is_symmetric(z in -700.0f64..700.0) {
        let s = sigmoid(z) + sigmoid(-z);
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn a_gradient_step_does_not_raise_the_loss(seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..20).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let labels: Vec<u8> = (0..20).map(|_| rng.gen_range(0..2)).collect();
        let data = Dataset::from_rows(rows, labels).unwrap();
        let beta = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0];
        let g = gradient(&beta, &data);
        let next: Vec<f64> = beta.iter().zip(&g).map(|(b, gj)| b - 0.1 * gj).collect();
        prop_assert!(log_loss(&next, &data) <= log_loss(&beta, &data) + 1e-12);
    }
}
