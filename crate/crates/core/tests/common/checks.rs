//! Independent plaintext oracles for the cryptosystems and Protocols 1 to 7.
//! The test side keeps copies of every secret key and decrypts the outputs
//! itself.

use heda_core::crypto::{Ciphertext, FixedPointCodec, PaillierKeypair, RsaKeypair};
use heda_core::protocols::{run_protocol, ConvertOptions, Operand, Party, PowOptions, ProtocolInput, Role, TranscriptMode};
use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub struct Keys {
    pub alice: Party,
    pub bob: Party,
    pub alice_paillier: PaillierKeypair,
    pub alice_rsa: RsaKeypair,
    pub bob_paillier: PaillierKeypair,
    pub codec: FixedPointCodec,
}

impl Keys {
    pub fn new(bits: u64, seed: u64) -> Keys {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let codec = FixedPointCodec::default();
        let alice_paillier = PaillierKeypair::generate(bits, &mut rng).unwrap();
        let alice_rsa = RsaKeypair::generate(bits, &mut rng).unwrap();
        let bob_paillier = PaillierKeypair::generate(bits, &mut rng).unwrap();
        let mut alice = Party::new(Role::Alice, alice_paillier.clone(), Some(alice_rsa.clone()), codec);
        let mut bob = Party::new(Role::Bob, bob_paillier.clone(), None, codec);
        Party::connect(&mut alice, &mut bob);
        Keys {
            alice,
            bob,
            alice_paillier,
            alice_rsa,
            bob_paillier,
            codec,
        }
    }

    /// Plaintext of a Paillier ciphertext under Alice's key, as a real.
    pub fn open_alice(&self, c: &Ciphertext) -> f64 {
        let v = self.alice_paillier.secret.decrypt_signed(c).unwrap();
        self.codec.decode_signed(&v, c.scale_exp())
    }

    pub fn open_bob(&self, c: &Ciphertext) -> f64 {
        let v = self.bob_paillier.secret.decrypt_signed(c).unwrap();
        self.codec.decode_signed(&v, c.scale_exp())
    }

    /// Signed plaintext of an RSA ciphertext under Alice's key.
    pub fn open_rsa(&self, c: &Ciphertext) -> f64 {
        let m = self.alice_rsa.secret.decrypt(c).unwrap();
        let n = self.alice_rsa.public.n();
        if m > (n >> 1u32) {
            let v = BigInt::from(m) - BigInt::from(n.clone());
            self.codec.decode_signed(&v, c.scale_exp())
        } else {
            self.codec.ln_decode(&m, c.scale_exp()).exp()
        }
    }
}

/// One Paillier case: `D(E(a) E(b)) = a + b mod N` and `D(E(a)^k) = k a mod N`.
pub fn paillier_case(kp: &PaillierKeypair, rng: &mut ChaCha20Rng) -> Result<(), String> {
    let n = kp.public.n();
    let a = rng.gen_biguint_below(n);
    let b = rng.gen_biguint_below(n);
    let k: u64 = rng.gen();
    let ca = kp.public.encrypt(&a, rng).unwrap();
    let cb = kp.public.encrypt(&b, rng).unwrap();
    let sum = kp.secret.decrypt(&kp.public.add(&ca, &cb).unwrap()).unwrap();
    if sum != (&a + &b) % n {
        return Err(format!("paillier sum mismatch for a={a} b={b}"));
    }
    let prod = kp
        .secret
        .decrypt(&kp.public.scalar_mul(&ca, &BigInt::from(k), 0).unwrap())
        .unwrap();
    if prod != (&a * k) % n {
        return Err(format!("paillier scalar mismatch for a={a} k={k}"));
    }
    Ok(())
}

/// One RSA case: `D(E(a) E(b)) = a b mod N` for units `a`, `b`.
pub fn rsa_case(kp: &RsaKeypair, rng: &mut ChaCha20Rng) -> Result<(), String> {
    let n = kp.public.n();
    let unit = |rng: &mut ChaCha20Rng| loop {
        let v = rng.gen_biguint_range(&BigUint::one(), n);
        if v.gcd(n).is_one() {
            return v;
        }
    };
    let a = unit(rng);
    let b = unit(rng);
    let ca = kp.public.encrypt(&a).unwrap();
    let cb = kp.public.encrypt(&b).unwrap();
    let prod = kp.secret.decrypt(&kp.public.mul(&ca, &cb).unwrap()).unwrap();
    if prod != (&a * &b) % n {
        return Err(format!("rsa product mismatch for a={a} b={b}"));
    }
    Ok(())
}

/// A real already on the fixed-point grid.
fn grid(rng: &mut ChaCha20Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo..hi) * 100.0).round() / 100.0
}

fn nonzero_grid(rng: &mut ChaCha20Rng, lo: f64, hi: f64) -> f64 {
    loop {
        let v = grid(rng, lo, hi);
        if v != 0.0 {
            return v;
        }
    }
}

pub const PROTOCOLS: [&str; 7] = ["add", "sub", "dot", "mul", "pow", "convert", "rekey"];

/// Tolerance kind of each protocol's output.
pub fn is_additive(name: &str) -> bool {
    matches!(name, "add" | "sub" | "dot" | "rekey")
}

/// Runs protocol `name` once on fresh random inputs of dimension `d` and
/// returns the worst error against the plaintext oracle: absolute for the
/// additive protocols, relative otherwise.
pub fn protocol_case(keys: &Keys, name: &str, d: usize, rng: &mut ChaCha20Rng) -> f64 {
    let alice = &keys.alice;
    let bob = &keys.bob;
    let a: Vec<f64> = (0..d).map(|_| grid(rng, -50.0, 50.0)).collect();
    let b: Vec<f64> = (0..d).map(|_| grid(rng, -50.0, 50.0)).collect();
    let encrypted_b = rng.gen_bool(0.5);
    let bob_operand = |values: &[f64], rng: &mut ChaCha20Rng| {
        if encrypted_b {
            let pk = &keys.alice_paillier.public;
            Operand::Encrypted(
                values
                    .iter()
                    .map(|&x| pk.encrypt_signed(&keys.codec.quantize(x, 1).unwrap(), 1, rng).unwrap())
                    .collect(),
            )
        } else {
            Operand::Plain(values.to_vec())
        }
    };
    let run = |input: ProtocolInput, rng: &mut ChaCha20Rng| {
        run_protocol(alice, bob, &input, TranscriptMode::Counting, rng).unwrap().0
    };
    let abs_err = |got: Vec<f64>, want: Vec<f64>| {
        got.iter().zip(&want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max)
    };
    let rel_err = |got: Vec<f64>, want: Vec<f64>| {
        got.iter()
            .zip(&want)
            .map(|(g, w)| ((g - w) / w).abs())
            .fold(0.0, f64::max)
    };
    match name {
        "add" | "sub" => {
            let sign = if name == "add" { 1.0 } else { -1.0 };
            let operand = bob_operand(&b, rng);
            let input = if name == "add" {
                ProtocolInput::Add { a: a.clone(), b: operand }
            } else {
                ProtocolInput::Sub { a: a.clone(), b: operand }
            };
            let out = run(input, rng);
            let want = a.iter().zip(&b).map(|(x, y)| x + sign * y).collect();
            abs_err(out.iter().map(|c| keys.open_alice(c)).collect(), want)
        }
        "dot" => {
            let out = run(ProtocolInput::Dot { a: a.clone(), b: b.clone() }, rng);
            let want = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>();
            abs_err(vec![keys.open_alice(&out[0])], vec![want])
        }
        "mul" => {
            let a: Vec<f64> = (0..d).map(|_| nonzero_grid(rng, -50.0, 50.0)).collect();
            let b: Vec<f64> = (0..d).map(|_| nonzero_grid(rng, -50.0, 50.0)).collect();
            let operand = if encrypted_b {
                let pk = &keys.alice_rsa.public;
                Operand::Encrypted(
                    b.iter()
                        .map(|&x| pk.encrypt_scaled(&keys.codec.encode_at(x, 1, pk.n()).unwrap(), 1).unwrap())
                        .collect(),
                )
            } else {
                Operand::Plain(b.clone())
            };
            let out = run(ProtocolInput::Mul { a: a.clone(), b: operand }, rng);
            let want = a.iter().zip(&b).map(|(x, y)| x * y).collect();
            rel_err(out.iter().map(|c| keys.open_rsa(c)).collect(), want)
        }
        "pow" => {
            let a: Vec<f64> = (0..d).map(|_| grid(rng, -1.0, 1.0)).collect();
            let e: Vec<i64> = (0..d).map(|_| rng.gen_range(0..=4)).collect();
            let pad = rng.gen_bool(0.5).then_some(4 * d as u64);
            let options = PowOptions {
                pad_to: pad,
                ..Default::default()
            };
            let out = run(ProtocolInput::Pow { a: a.clone(), b: e.clone(), options }, rng);
            let want = a.iter().zip(&e).map(|(x, k)| x * *k as f64).sum::<f64>().exp();
            rel_err(vec![keys.open_rsa(&out[0])], vec![want])
        }
        "convert" => {
            let pk = &keys.alice_rsa.public;
            let a: Vec<f64> = (0..d).map(|_| grid(rng, -3.0, 3.0)).collect();
            let inputs = a
                .iter()
                .map(|&x| pk.encrypt_scaled(&keys.codec.quantize_exp(x, 2).unwrap(), 2).unwrap())
                .collect();
            let out = run(
                ProtocolInput::Convert {
                    inputs,
                    options: ConvertOptions::default(),
                },
                rng,
            );
            let want = a.iter().map(|x| x.exp()).collect();
            rel_err(out.iter().map(|c| keys.open_alice(c)).collect(), want)
        }
        "rekey" => {
            let pk = &keys.alice_paillier.public;
            let inputs = a
                .iter()
                .map(|&x| pk.encrypt_signed(&keys.codec.quantize(x, 1).unwrap(), 1, rng).unwrap())
                .collect();
            let out = run(ProtocolInput::Rekey { inputs }, rng);
            abs_err(out.iter().map(|c| keys.open_bob(c)).collect(), a)
        }
        other => panic!("unknown protocol {other}"),
    }
}

/// Tolerance of the oracle comparison.
pub fn tolerance(name: &str, codec: &FixedPointCodec) -> f64 {
    if is_additive(name) {
        0.5 / codec.scale() as f64
    } else {
        1e-2
    }
}
