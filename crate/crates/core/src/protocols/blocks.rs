//! Protocols 1 to 5: one message from Alice, then Bob finishes alone.

use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};

use super::message::Item;
use super::transport::Session;
use super::{Party, ProtocolError, ProtocolId, Result, Role};
use crate::crypto::{Ciphertext, Scheme};

/// Bob's side of an arithmetic protocol: plaintext reals, or ciphertexts
/// under Alice's key at scale exponent 1.
#[derive(Debug, Clone)]
pub enum Operand {
    Plain(Vec<f64>),
    Encrypted(Vec<Ciphertext>),
}

impl Operand {
    fn len(&self) -> usize {
        match self {
            Operand::Plain(v) => v.len(),
            Operand::Encrypted(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PowOptions {
    /// Scale exponent of each `||e^{a_i}||` factor.
    pub factor_scale_exp: u32,
    /// Pad every product to this many factors with encryptions of 1.0 so
    /// the result's scale does not reveal the exponent sum.
    pub pad_to: Option<u64>,
}

impl Default for PowOptions {
    fn default() -> Self {
        PowOptions {
            factor_scale_exp: 2,
            pad_to: None,
        }
    }
}

fn check_dims(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(ProtocolError::DimensionMismatch { left, right });
    }
    Ok(())
}

/// Alice encrypts `values` at scale 1 under its own Paillier key and sends them.
fn alice_send_paillier<R: RngCore + CryptoRng + ?Sized>(
    alice: &Party,
    session: &mut Session,
    protocol: ProtocolId,
    values: &[f64],
    rng: &mut R,
) -> Result<()> {
    let codec = alice.codec();
    let sk = alice.paillier_secret();
    let payload = values
        .iter()
        .map(|&x| {
            let v = codec.quantize(x, 1)?;
            Ok(Item::Cipher(sk.encrypt_signed(&v, 1, rng)?))
        })
        .collect::<Result<Vec<_>>>()?;
    session.send(Role::Alice, protocol, payload)
}

fn bob_recv_ciphers(session: &mut Session, protocol: ProtocolId) -> Result<Vec<Ciphertext>> {
    session
        .recv(Role::Bob, protocol)?
        .into_iter()
        .map(|i| i.into_cipher())
        .collect()
}

/// Bob's operand as ciphertexts under Alice's Paillier key at scale 1,
/// negated when `negate` is set.
fn bob_operand<R: RngCore + CryptoRng + ?Sized>(
    bob: &Party,
    b: &Operand,
    negate: bool,
    rng: &mut R,
) -> Result<Vec<Ciphertext>> {
    let pk = bob.peer_paillier()?;
    match b {
        Operand::Plain(values) => values
            .iter()
            .map(|&x| {
                let mut v = bob.codec().quantize(x, 1)?;
                if negate {
                    v = -v;
                }
                Ok(pk.encrypt_signed(&v, 1, rng)?)
            })
            .collect(),
        Operand::Encrypted(cts) => cts
            .iter()
            .map(|c| {
                if c.scale_exp() != 1 {
                    return Err(ProtocolError::ScaleMismatch {
                        expected: 1,
                        found: c.scale_exp(),
                    });
                }
                Ok(if negate { pk.negate(c)? } else { c.clone() })
            })
            .collect(),
    }
}

fn combine<R: RngCore + CryptoRng + ?Sized>(
    alice: &Party,
    bob: &Party,
    session: &mut Session,
    protocol: ProtocolId,
    a: &[f64],
    b: &Operand,
    negate: bool,
    rng: &mut R,
) -> Result<Vec<Ciphertext>> {
    check_dims(a.len(), b.len())?;
    alice_send_paillier(alice, session, protocol, a, rng)?;

    let received = bob_recv_ciphers(session, protocol)?;
    check_dims(received.len(), b.len())?;
    let pk = bob.peer_paillier()?;
    let addend = bob_operand(bob, b, negate, rng)?;
    received
        .iter()
        .zip(&addend)
        .map(|(x, y)| Ok(pk.add(x, y)?))
        .collect()
}

/// Secure addition: Bob ends with `[[a_i + b_i]]` under Alice's key, scale 1.
pub fn secure_add<R: RngCore + CryptoRng + ?Sized>(
    alice: &Party,
    bob: &Party,
    session: &mut Session,
    a: &[f64],
    b: &Operand,
    rng: &mut R,
) -> Result<Vec<Ciphertext>> {
    combine(alice, bob, session, ProtocolId::SecureAdd, a, b, false, rng)
}

/// Secure subtraction: Bob adds the additive inverses `N - b_i`, ending with
/// `[[a_i - b_i]]`.
pub fn secure_sub<R: RngCore + CryptoRng + ?Sized>(
    alice: &Party,
    bob: &Party,
    session: &mut Session,
    a: &[f64],
    b: &Operand,
    rng: &mut R,
) -> Result<Vec<Ciphertext>> {
    combine(alice, bob, session, ProtocolId::SecureSub, a, b, true, rng)
}

/// Secure dot product: Bob ends with `[[sum a_i b_i]]` at scale 2 using its
/// plaintext `b`.
pub fn secure_dot<R: RngCore + CryptoRng + ?Sized>(
    alice: &Party,
    bob: &Party,
    session: &mut Session,
    a: &[f64],
    b: &[f64],
    rng: &mut R,
) -> Result<Ciphertext> {
    check_dims(a.len(), b.len())?;
    alice_send_paillier(alice, session, ProtocolId::SecureDot, a, rng)?;

    let received = bob_recv_ciphers(session, ProtocolId::SecureDot)?;
    check_dims(received.len(), b.len())?;
    let pk = bob.peer_paillier()?;
    let mut acc = pk.zero(2);
    for (c, &bi) in received.iter().zip(b) {
        let k = bob.codec().quantize(bi, 1)?;
        acc = pk.add(&acc, &pk.scalar_mul(c, &k, 1)?)?;
    }
    Ok(acc)
}

/// Secure multiplication: Alice sends `||a_i||`; Bob multiplies by `||b_i||` (both under
/// Alice's RSA key) and ends with `||a_i b_i||` at scale 2. Values may be
/// signed but must quantize to nonzero integers.
pub fn secure_mul(
    alice: &Party,
    bob: &Party,
    session: &mut Session,
    a: &[f64],
    b: &Operand,
) -> Result<Vec<Ciphertext>> {
    check_dims(a.len(), b.len())?;
    {
        let pk = alice.rsa_public()?;
        let codec = alice.codec();
        let payload = a
            .iter()
            .map(|&x| {
                let m = codec.encode_at(x, 1, pk.n())?;
                Ok(Item::Cipher(pk.encrypt_scaled(&m, 1)?))
            })
            .collect::<Result<Vec<_>>>()?;
        session.send(Role::Alice, ProtocolId::SecureMul, payload)?;
    }

    let received = bob_recv_ciphers(session, ProtocolId::SecureMul)?;
    check_dims(received.len(), b.len())?;
    let pk = bob.peer_rsa()?;
    let factors: Vec<Ciphertext> = match b {
        Operand::Plain(values) => values
            .iter()
            .map(|&x| {
                let m = bob.codec().encode_at(x, 1, pk.n())?;
                Ok(pk.encrypt_scaled(&m, 1)?)
            })
            .collect::<Result<_>>()?,
        Operand::Encrypted(cts) => cts.clone(),
    };
    received
        .iter()
        .zip(&factors)
        .map(|(x, y)| Ok(pk.mul(x, y)?))
        .collect()
}

/// Secure power for one vector: Bob ends with `||e^{sum a_i b_i}||`.
pub fn secure_pow(
    alice: &Party,
    bob: &Party,
    session: &mut Session,
    a: &[f64],
    b: &[i64],
    options: &PowOptions,
) -> Result<Ciphertext> {
    let mut out = secure_pow_batch(alice, bob, session, &[a.to_vec()], b, options)?;
    Ok(out.remove(0))
}

/// Secure power over many records sharing Bob's exponent vector `b`. Alice
/// sends `||round(e^{a_ij} Q^s)||` for every record in a single message.
pub fn secure_pow_batch(
    alice: &Party,
    bob: &Party,
    session: &mut Session,
    records: &[Vec<f64>],
    b: &[i64],
    options: &PowOptions,
) -> Result<Vec<Ciphertext>> {
    if let Some(&neg) = b.iter().find(|&&x| x < 0) {
        return Err(ProtocolError::NegativeExponent(neg));
    }
    for r in records {
        check_dims(r.len(), b.len())?;
    }
    let s = options.factor_scale_exp;
    {
        let pk = alice.rsa_public()?;
        let codec = alice.codec();
        let mut payload = Vec::with_capacity(records.len() * b.len());
        for r in records {
            for &x in r {
                let m = codec.quantize_exp(x, s)?;
                payload.push(Item::Cipher(pk.encrypt_scaled(&m, s)?));
            }
        }
        session.send(Role::Alice, ProtocolId::SecurePow, payload)?;
    }

    let received = bob_recv_ciphers(session, ProtocolId::SecurePow)?;
    check_dims(received.len(), records.len() * b.len())?;
    let pk = bob.peer_rsa()?;
    let codec = bob.codec();
    let total: u64 = b.iter().map(|&x| x as u64).sum();
    let factors = match options.pad_to {
        Some(pad) if pad < total => {
            return Err(ProtocolError::Range(format!(
                "exponent sum {total} exceeds padding target {pad}"
            )))
        }
        Some(pad) => pad,
        None => total,
    };
    let scale_bits = (factors * s as u64) as f64 * (codec.scale() as f64).log2();
    if scale_bits >= (pk.bits() - 1) as f64 {
        return Err(ProtocolError::Range(format!(
            "{factors} factors at scale {s} exceed the {}-bit RSA modulus",
            pk.bits()
        )));
    }
    let pad = if factors > total {
        let one = pk.encrypt_scaled(&codec.factor(s), s)?;
        Some(pk.pow(&one, &BigUint::from(factors - total))?)
    } else {
        None
    };

    let d = b.len();
    (0..records.len())
        .map(|i| {
            let chunk = &received[i * d..(i + 1) * d];
            let mut acc = pk.one();
            for (c, &e) in chunk.iter().zip(b) {
                if e > 0 {
                    acc = pk.mul(&acc, &pk.pow(c, &BigUint::from(e as u64))?)?;
                }
            }
            if let Some(p) = &pad {
                acc = pk.mul(&acc, p)?;
            }
            debug_assert_eq!(acc.scheme(), Scheme::Rsa);
            Ok(acc)
        })
        .collect()
}
