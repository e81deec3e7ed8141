mod common;

use std::time::Instant;

use heda_core::crypto::{FixedPointCodec, TEST_KEY_BITS};
use heda_core::training::{secure_lr_train, Hyperparams, Provider, SecureConfig, User};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use common::{toy, Shadow};

#[test]
fn secure_matches_quantized_shadow() {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let codec = FixedPointCodec::new(100).unwrap();
    let data = toy(100, 3, 1);
    let provider = Provider::generate(data.clone(), TEST_KEY_BITS, codec, &mut rng).unwrap();
    let user = User::generate(TEST_KEY_BITS, codec, &mut rng).unwrap();
    let hyper = Hyperparams {
        alpha: 1.0,
        cycles: 10,
        threshold: 0.0,
    };
    let config = SecureConfig {
        trace: true,
        ..Default::default()
    };
    let t = Instant::now();
    let out = secure_lr_train(&user, &[provider], &hyper, &config, &mut rng).unwrap();
    eprintln!("secure 100x3x10: {:?}", t.elapsed());
    let shadow = Shadow {
        q: 100.0,
        beta_scale: 10.0,
        budget: out.metrics.exponent_budget.unwrap(),
    };
    let expected = shadow.train(&data, 1.0, 10);
    eprintln!("secure {:?}\nshadow {:?}", out.model.beta, expected);
    for (a, b) in out.model.beta.iter().zip(&expected) {
        assert!((a - b).abs() <= 0.05, "{a} vs {b}");
    }
    for step in &out.trace {
        let g = shadow.gradient(&step.beta, &data);
        for (a, b) in step.gradient.iter().zip(&g) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }
    assert_eq!(out.iterations, 10);
    assert_eq!(out.metrics.round_trips, 30);
}

#[test]
fn three_round_trips_per_provider_and_iteration() {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let codec = FixedPointCodec::default();
    let data = toy(12, 2, 3);
    let provider = Provider::generate(data, TEST_KEY_BITS, codec, &mut rng).unwrap();
    let user = User::generate(TEST_KEY_BITS, codec, &mut rng).unwrap();
    let hyper = Hyperparams {
        alpha: 0.1,
        cycles: 63,
        threshold: 0.0,
    };
    let out = secure_lr_train(&user, &[provider], &hyper, &SecureConfig::default(), &mut rng).unwrap();
    assert_eq!(out.iterations, 63);
    assert_eq!(out.metrics.round_trips, 189);
}

#[test]
fn two_providers_match_the_pooled_shadow() {
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    let codec = FixedPointCodec::default();
    let data = toy(60, 2, 5);
    let blocks = data.partition_rows(2);
    let providers: Vec<Provider> = blocks
        .into_iter()
        .map(|b| Provider::generate(b, TEST_KEY_BITS, codec, &mut rng).unwrap())
        .collect();
    let user = User::generate(TEST_KEY_BITS, codec, &mut rng).unwrap();
    let hyper = Hyperparams {
        alpha: 1.0,
        cycles: 5,
        threshold: 0.0,
    };
    let out = secure_lr_train(&user, &providers, &hyper, &SecureConfig::default(), &mut rng).unwrap();
    let shadow = Shadow {
        q: 100.0,
        beta_scale: 10.0,
        budget: out.metrics.exponent_budget.unwrap(),
    };
    let expected = shadow.train(&data, 1.0, 5);
    for (a, b) in out.model.beta.iter().zip(&expected) {
        assert!((a - b).abs() <= 0.05, "{a} vs {b}");
    }
    assert_eq!(out.metrics.round_trips, 2 * 3 * 5);
    assert_eq!(out.metrics.per_provider.len(), 2);
    assert_eq!(out.metrics.times.provider_hc.len(), 2);
}

#[test]
fn early_stop_on_threshold() {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let codec = FixedPointCodec::default();
    let provider = Provider::generate(toy(20, 1, 9), TEST_KEY_BITS, codec, &mut rng).unwrap();
    let user = User::generate(TEST_KEY_BITS, codec, &mut rng).unwrap();
    let hyper = Hyperparams {
        alpha: 0.1,
        cycles: 50,
        threshold: 10.0,
    };
    let out = secure_lr_train(&user, &[provider], &hyper, &SecureConfig::default(), &mut rng).unwrap();
    assert!(out.converged);
    assert_eq!(out.iterations, 1);
    assert_eq!(out.metrics.round_trips, 3);
}
