//! Protocols 6 and 7: ciphertext conversions, one round trip each.

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::{CryptoRng, Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::message::Item;
use super::transport::Session;
use super::{Party, ProtocolError, ProtocolId, Result, Role};
use crate::crypto::{Ciphertext, Scheme};

/// Uniform real interval for the exponent blinding `r` of the RSA to Paillier conversion. The
/// lower end must be positive: `r = 0` would hand Alice the raw value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlindingRange {
    lo: f64,
    hi: f64,
}

impl BlindingRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || hi < lo {
            return Err(ProtocolError::Parameter(format!(
                "blinding range [{lo}, {hi}] must satisfy 0 < lo <= hi"
            )));
        }
        Ok(BlindingRange { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.hi == self.lo {
            return self.lo;
        }
        rng.gen_range(self.lo..=self.hi)
    }
}

impl Default for BlindingRange {
    /// `r` in `[1, 40 ln 2]`, so the blinding factor `e^r` is at most `2^40`.
    fn default() -> Self {
        BlindingRange {
            lo: 1.0,
            hi: 40.0 * std::f64::consts::LN_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvertOptions {
    /// Alice re-encrypts the `root`-th root of the blinded value.
    pub root: u32,
    pub blinding: BlindingRange,
    /// Scale exponent of Bob's RSA blinding factor `round(e^r Q^s)`.
    pub blind_scale_exp: u32,
    /// Scale exponent of Alice's Paillier re-encryption.
    pub out_scale_exp: u32,
    /// Scale exponent of Bob's unblinding multiplier; chosen from the
    /// blinding range when absent.
    pub unblind_scale_exp: Option<u32>,
    /// Upper bound on the bit length of the RSA plaintexts being converted.
    /// Defaults to the input scale plus 64 bits.
    pub plain_bound_bits: Option<u64>,
}

impl Default for ConvertOptions {
    fn default() -> Self {
        ConvertOptions {
            root: 1,
            blinding: BlindingRange::default(),
            blind_scale_exp: 2,
            out_scale_exp: 2,
            unblind_scale_exp: None,
            plain_bound_bits: None,
        }
    }
}

impl ConvertOptions {
    /// Smallest unblinding scale that keeps four significant digits in
    /// `e^{(offset - r)/root}` for every offset at least `min_offset`.
    pub fn auto_unblind_scale(&self, min_offset: f64, ln_q: f64) -> u32 {
        let worst = (self.blinding.hi - min_offset.min(0.0)) / self.root as f64;
        ((worst + 4.0 * std::f64::consts::LN_10) / ln_q).ceil().max(1.0) as u32
    }
}

/// RSA to Paillier conversion with blinding sampled from `options.blinding`.
///
/// Bob holds `||v_i||` under Alice's RSA key. It ends with Paillier
/// ciphertexts under Alice's key of `v_i^{1/root} * e^{offset_i / root}` at
/// scale `out_scale_exp + unblind_scale_exp`. `offsets` are Bob-private log
/// adjustments (zero when absent).
pub fn convert_rsa_to_paillier<R: RngCore + CryptoRng + ?Sized>(
    alice: &Party,
    bob: &Party,
    session: &mut Session,
    inputs: &[Ciphertext],
    offsets: Option<&[f64]>,
    options: &ConvertOptions,
    rng: &mut R,
) -> Result<Vec<Ciphertext>> {
    let rhos: Vec<f64> = inputs.iter().map(|_| options.blinding.sample(rng)).collect();
    convert_rsa_to_paillier_blinded(alice, bob, session, inputs, offsets, &rhos, options, rng)
}

/// RSA to Paillier conversion with caller-chosen blinding exponents.
#[allow(clippy::too_many_arguments)]
pub fn convert_rsa_to_paillier_blinded<R: RngCore + CryptoRng + ?Sized>(
    alice: &Party,
    bob: &Party,
    session: &mut Session,
    inputs: &[Ciphertext],
    offsets: Option<&[f64]>,
    rhos: &[f64],
    options: &ConvertOptions,
    rng: &mut R,
) -> Result<Vec<Ciphertext>> {
    if options.root == 0 {
        return Err(ProtocolError::Parameter("root must be positive".into()));
    }
    if rhos.len() != inputs.len() {
        return Err(ProtocolError::DimensionMismatch {
            left: inputs.len(),
            right: rhos.len(),
        });
    }
    if let Some(off) = offsets {
        if off.len() != inputs.len() {
            return Err(ProtocolError::DimensionMismatch {
                left: inputs.len(),
                right: off.len(),
            });
        }
    }
    if rhos.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(ProtocolError::Parameter("blinding exponents must be positive".into()));
    }
    let root = options.root as f64;
    let codec = *bob.codec();
    let ln_q = codec.ln_scale();

    // Bob: ||v e^r|| = ||v|| * ||round(e^r Q^sb)||
    {
        let pk = bob.peer_rsa()?;
        let mut payload = Vec::with_capacity(inputs.len());
        for (c, &rho) in inputs.iter().zip(rhos) {
            if c.scheme() != Scheme::Rsa || c.key_id() != pk.key_id() {
                return Err(ProtocolError::Parameter(
                    "inputs must be RSA ciphertexts under Alice's key".into(),
                ));
            }
            let factor = codec.quantize_exp(rho, options.blind_scale_exp)?;
            let bound = options
                .plain_bound_bits
                .unwrap_or((c.scale_exp() as f64 * codec.scale() as f64).log2().ceil() as u64 + 64);
            if bound + factor.bits() >= pk.bits() - 1 {
                return Err(ProtocolError::Range(format!(
                    "blinded value needs {} bits, modulus has {}",
                    bound + factor.bits(),
                    pk.bits()
                )));
            }
            let blind = pk.encrypt_scaled(&factor, options.blind_scale_exp)?;
            payload.push(Item::Cipher(pk.mul(c, &blind)?));
        }
        session.send(Role::Bob, ProtocolId::RsaToPaillier, payload)?;
    }

    // Alice: decrypt, take the root in the log domain, re-encrypt under Paillier.
    {
        let received = session.recv(Role::Alice, ProtocolId::RsaToPaillier)?;
        let rsa = alice.rsa_secret()?;
        let sk = alice.paillier_secret();
        let acodec = alice.codec();
        let half_n_ln = crate::crypto::ln_biguint(sk.public().n()) - std::f64::consts::LN_2;
        let mut payload = Vec::with_capacity(received.len());
        for (item, c) in received.into_iter().zip(inputs) {
            let blinded = item.into_cipher()?;
            let scale = c.scale_exp() + options.blind_scale_exp;
            let blinded = Ciphertext::from_parts(
                blinded.value().clone(),
                Scheme::Rsa,
                blinded.key_id(),
                scale,
            );
            let w = rsa.decrypt(&blinded)?;
            if w.is_zero() {
                return Err(ProtocolError::Range("blinded plaintext is zero".into()));
            }
            let ln_y = acodec.ln_decode(&w, scale) / root;
            if ln_y + options.out_scale_exp as f64 * acodec.ln_scale() >= half_n_ln {
                return Err(ProtocolError::Range(
                    "re-encrypted value exceeds the Paillier plaintext space".into(),
                ));
            }
            let m = acodec.quantize_exp(ln_y, options.out_scale_exp)?;
            payload.push(Item::Cipher(sk.encrypt_scaled(&m, options.out_scale_exp, rng)?));
        }
        session.send(Role::Alice, ProtocolId::RsaToPaillier, payload)?;
    }

    // Bob: multiply by round(e^{(offset - r)/root} Q^su).
    let received = session.recv(Role::Bob, ProtocolId::RsaToPaillier)?;
    if received.len() != inputs.len() {
        return Err(ProtocolError::DimensionMismatch {
            left: inputs.len(),
            right: received.len(),
        });
    }
    let pk = bob.peer_paillier()?;
    let min_offset = offsets
        .map(|o| o.iter().cloned().fold(f64::INFINITY, f64::min))
        .unwrap_or(0.0);
    let su = options
        .unblind_scale_exp
        .unwrap_or_else(|| options.auto_unblind_scale(min_offset, ln_q));
    received
        .into_iter()
        .enumerate()
        .map(|(i, item)| {
            let c = item.into_cipher()?.relabel_scale(options.out_scale_exp);
            let offset = offsets.map_or(0.0, |o| o[i]);
            let u = codec.quantize_exp((offset - rhos[i]) / root, su)?;
            if u.is_zero() {
                return Err(ProtocolError::Range(
                    "unblinding factor underflows its scale".into(),
                ));
            }
            Ok(pk.scalar_mul(&c, &BigInt::from(u), su)?)
        })
        .collect()
}

/// Exclusive upper bound of the rekey's additive mask: `min(N_A, N_B) / 2^80`.
pub fn rekey_mask_bound(n_alice: &BigUint, n_bob: &BigUint) -> BigUint {
    n_alice.min(n_bob) >> 80u32
}

/// Rekey: re-encrypts Bob's `[[b_i]]` under Alice's Paillier key as
/// `[[b_i]]` under Bob's own key. Alice only sees `b_i + r_i`.
pub fn rekey_paillier<R: RngCore + CryptoRng + ?Sized>(
    alice: &Party,
    bob: &Party,
    session: &mut Session,
    inputs: &[Ciphertext],
    rng: &mut R,
) -> Result<Vec<Ciphertext>> {
    let pk_alice = bob.peer_paillier()?;
    let pk_bob = bob.paillier_public();
    let bound = rekey_mask_bound(pk_alice.n(), pk_bob.n());
    if bound <= BigUint::one() {
        return Err(ProtocolError::Parameter("keys too small for statistical masking".into()));
    }

    let masks: Vec<BigUint> = inputs
        .iter()
        .map(|_| rng.gen_biguint_range(&BigUint::one(), &bound))
        .collect();
    let payload = inputs
        .iter()
        .zip(&masks)
        .map(|(c, r)| Ok(Item::Cipher(pk_alice.add_plain(c, r)?)))
        .collect::<Result<Vec<_>>>()?;
    session.send(Role::Bob, ProtocolId::Rekey, payload)?;

    {
        let received = session.recv(Role::Alice, ProtocolId::Rekey)?;
        let sk = alice.paillier_secret();
        let peer = alice.peer_paillier()?;
        let payload = received
            .into_iter()
            .zip(inputs)
            .map(|(item, orig)| {
                let c = item.into_cipher()?.relabel_scale(orig.scale_exp());
                let masked = sk.decrypt_signed(&c)?;
                Ok(Item::Cipher(peer.encrypt_signed(&masked, orig.scale_exp(), rng)?))
            })
            .collect::<Result<Vec<_>>>()?;
        session.send(Role::Alice, ProtocolId::Rekey, payload)?;
    }

    let received = session.recv(Role::Bob, ProtocolId::Rekey)?;
    if received.len() != inputs.len() {
        return Err(ProtocolError::DimensionMismatch {
            left: inputs.len(),
            right: received.len(),
        });
    }
    received
        .into_iter()
        .zip(inputs.iter().zip(&masks))
        .map(|(item, (orig, r))| {
            let c = item.into_cipher()?.relabel_scale(orig.scale_exp());
            let neg_r = pk_bob.to_residue(&-BigInt::from(r.clone()))?;
            Ok(pk_bob.add_plain(&c, &neg_r)?)
        })
        .collect()
}
