use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{CryptoRng, RngCore};

use super::paillier::check_bits;
use super::prime::gen_prime;
use super::{Ciphertext, CryptoError, KeyId, Result, Scheme};

pub const RSA_PUBLIC_EXPONENT: u32 = 65_537;

/// Textbook RSA public key. Unpadded on purpose: padding would destroy the
/// multiplicative homomorphism, so encryption is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsaPublicKey {
    n: BigUint,
    e: BigUint,
    bits: u64,
    key_id: KeyId,
}

#[derive(Clone)]
pub struct RsaSecretKey {
    public: RsaPublicKey,
    d: BigUint,
    p: BigUint,
    q: BigUint,
    dp: BigUint,
    dq: BigUint,
    q_inv_p: BigUint,
}

impl std::fmt::Debug for RsaSecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RsaSecretKey")
            .field("key_id", &self.public.key_id)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub struct RsaKeypair {
    pub public: RsaPublicKey,
    pub secret: RsaSecretKey,
}

impl RsaKeypair {
    pub fn generate<R: RngCore + CryptoRng + ?Sized>(bits: u64, rng: &mut R) -> Result<Self> {
        check_bits(bits)?;
        let e = BigUint::from(RSA_PUBLIC_EXPONENT);
        loop {
            let p = gen_prime(bits / 2, rng);
            let q = gen_prime(bits / 2, rng);
            if p == q {
                continue;
            }
            if !(&p - 1u32).gcd(&e).is_one() || !(&q - 1u32).gcd(&e).is_one() {
                continue;
            }
            if (&p * &q).bits() != bits {
                continue;
            }
            return Self::from_primes(p, q, e);
        }
    }

    pub fn from_primes(p: BigUint, q: BigUint, e: BigUint) -> Result<Self> {
        let secret = RsaSecretKey::from_primes(p, q, e)?;
        Ok(RsaKeypair {
            public: secret.public.clone(),
            secret,
        })
    }

    pub fn key_id(&self) -> KeyId {
        self.public.key_id
    }
}

impl RsaPublicKey {
    pub fn new(n: BigUint, e: BigUint) -> Result<Self> {
        if n.bits() < 16 || e < BigUint::from(3u32) || e >= n {
            return Err(CryptoError::Parameter("invalid RSA public key".into()));
        }
        Ok(RsaPublicKey {
            bits: n.bits(),
            key_id: KeyId::derive(Scheme::Rsa, &n),
            n,
            e,
        })
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn e(&self) -> &BigUint {
        &self.e
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn key_id(&self) -> KeyId {
        self.key_id
    }

    pub fn encrypt(&self, m: &BigUint) -> Result<Ciphertext> {
        self.encrypt_scaled(m, 0)
    }

    /// Encrypts `m in Z_N^*`. Zero and other non-units are rejected.
    pub fn encrypt_scaled(&self, m: &BigUint, scale_exp: u32) -> Result<Ciphertext> {
        if m.is_zero() || m >= &self.n {
            return Err(CryptoError::PlaintextRange);
        }
        if !m.gcd(&self.n).is_one() {
            return Err(CryptoError::NotInvertible);
        }
        let c = m.modpow(&self.e, &self.n);
        Ok(Ciphertext::new(c, Scheme::Rsa, self.key_id, scale_exp))
    }

    fn check(&self, c: &Ciphertext) -> Result<()> {
        c.expect(Scheme::Rsa, self.key_id)
    }

    /// `||m1 * m2|| = ||m1|| * ||m2|| mod N`; scales add.
    pub fn mul(&self, c1: &Ciphertext, c2: &Ciphertext) -> Result<Ciphertext> {
        self.check(c1)?;
        self.check(c2)?;
        let v = (c1.value() * c2.value()) % &self.n;
        Ok(Ciphertext::new(
            v,
            Scheme::Rsa,
            self.key_id,
            c1.scale_exp() + c2.scale_exp(),
        ))
    }

    /// `||m^k||` by square-and-multiply; the scale is multiplied by `k`.
    pub fn pow(&self, c: &Ciphertext, k: &BigUint) -> Result<Ciphertext> {
        self.check(c)?;
        let scale = k
            .to_u32()
            .and_then(|k| k.checked_mul(c.scale_exp()))
            .or_else(|| (c.scale_exp() == 0).then_some(0))
            .ok_or(CryptoError::ScaleOverflow {
                scale_exp: u32::MAX,
                key_bits: self.bits,
            })?;
        let v = c.value().modpow(k, &self.n);
        Ok(Ciphertext::new(v, Scheme::Rsa, self.key_id, scale))
    }

    /// Deterministic encryption of one, the identity for [`mul`](Self::mul).
    pub fn one(&self) -> Ciphertext {
        Ciphertext::new(BigUint::one(), Scheme::Rsa, self.key_id, 0)
    }
}

impl RsaSecretKey {
    pub fn from_primes(p: BigUint, q: BigUint, e: BigUint) -> Result<Self> {
        if p == q {
            return Err(CryptoError::Parameter("primes must be distinct".into()));
        }
        let (p, q) = if p < q { (q, p) } else { (p, q) };
        let public = RsaPublicKey::new(&p * &q, e)?;
        let phi = (&p - 1u32) * (&q - 1u32);
        let d = public
            .e
            .modinv(&phi)
            .ok_or_else(|| CryptoError::Parameter("e is not invertible mod phi(N)".into()))?;
        let dp = &d % (&p - 1u32);
        let dq = &d % (&q - 1u32);
        let q_inv_p = q
            .modinv(&p)
            .ok_or_else(|| CryptoError::Parameter("p and q not coprime".into()))?;
        Ok(RsaSecretKey {
            public,
            d,
            p,
            q,
            dp,
            dq,
            q_inv_p,
        })
    }

    pub fn public(&self) -> &RsaPublicKey {
        &self.public
    }

    pub fn d(&self) -> &BigUint {
        &self.d
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn key_id(&self) -> KeyId {
        self.public.key_id
    }

    /// CRT decryption.
    pub fn decrypt(&self, c: &Ciphertext) -> Result<BigUint> {
        c.expect(Scheme::Rsa, self.public.key_id)?;
        if c.value() >= &self.public.n {
            return Err(CryptoError::PlaintextRange);
        }
        let mp = c.value().modpow(&self.dp, &self.p);
        let mq = c.value().modpow(&self.dq, &self.q);
        let mq_mod_p = &mq % &self.p;
        let diff = if mp >= mq_mod_p {
            mp - mq_mod_p
        } else {
            mp + &self.p - mq_mod_p
        };
        let h = (diff * &self.q_inv_p) % &self.p;
        Ok(mq + h * &self.q)
    }
}
