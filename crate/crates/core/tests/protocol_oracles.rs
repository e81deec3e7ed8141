mod common;

use std::sync::OnceLock;

use heda_core::crypto::TEST_KEY_BITS;
use heda_core::protocols::{
    run_protocol, ConvertOptions, Operand, ProtocolId, ProtocolInput, TranscriptMode,
};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use common::checks::{protocol_case, tolerance, Keys, PROTOCOLS};

fn keys() -> &'static Keys {
    static KEYS: OnceLock<Keys> = OnceLock::new();
    KEYS.get_or_init(|| Keys::new(TEST_KEY_BITS, 5))
}

fn check(name: &str) {
    let k = keys();
    let mut rng = ChaCha20Rng::seed_from_u64(name.len() as u64 * 31 + name.as_bytes()[0] as u64);
    let tol = tolerance(name, &k.codec);
    for case in 0..200 {
        let d = 1 + case % 4;
        let err = protocol_case(k, name, d, &mut rng);
        assert!(err <= tol, "{name} case {case}: error {err} > {tol}");
    }
}

#[test]
fn add_matches_oracle() {
    check("add");
}

#[test]
fn sub_matches_oracle() {
    check("sub");
}

#[test]
fn dot_matches_oracle() {
    check("dot");
}

#[test]
fn mul_matches_oracle() {
    check("mul");
}

#[test]
fn pow_matches_oracle() {
    check("pow");
}

#[test]
fn convert_matches_oracle() {
    check("convert");
}

#[test]
fn rekey_matches_oracle() {
    check("rekey");
}

#[test]
fn every_protocol_is_covered() {
    assert_eq!(PROTOCOLS.len(), 7);
}

#[test]
fn interaction_counts() {
    let k = keys();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let add = ProtocolInput::Add {
        a: vec![1.0, 2.0],
        b: Operand::Plain(vec![3.0, 4.0]),
    };
    let (_, t) = run_protocol(&k.alice, &k.bob, &add, TranscriptMode::Full, &mut rng).unwrap();
    assert_eq!(t.message_count(), 1);
    assert_eq!(t.round_trips(), 0);
    assert!(t.messages().iter().all(|m| m.protocol == ProtocolId::SecureAdd));

    let pk = &k.alice_rsa.public;
    let inputs = vec![pk.encrypt_scaled(&k.codec.quantize_exp(0.5, 2).unwrap(), 2).unwrap()];
    let convert = ProtocolInput::Convert {
        inputs,
        options: ConvertOptions::default(),
    };
    let (_, t) = run_protocol(&k.alice, &k.bob, &convert, TranscriptMode::Full, &mut rng).unwrap();
    assert_eq!((t.message_count(), t.round_trips()), (2, 1));
}

#[test]
fn dimension_mismatch_is_rejected() {
    let k = keys();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let bad = ProtocolInput::Dot {
        a: vec![1.0, 2.0],
        b: vec![1.0],
    };
    assert!(run_protocol(&k.alice, &k.bob, &bad, TranscriptMode::Counting, &mut rng).is_err());
    let neg = ProtocolInput::Pow {
        a: vec![1.0],
        b: vec![-1],
        options: Default::default(),
    };
    assert!(run_protocol(&k.alice, &k.bob, &neg, TranscriptMode::Counting, &mut rng).is_err());
}
