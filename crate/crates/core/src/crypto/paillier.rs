use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{CryptoRng, RngCore};

use super::prime::gen_prime;
use super::{Ciphertext, CryptoError, KeyId, Result, Scheme, MIN_KEY_BITS};

/// Paillier public key with generator `g = N + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaillierPublicKey {
    n: BigUint,
    n_squared: BigUint,
    half_n: BigUint,
    bits: u64,
    key_id: KeyId,
}

/// Factorisation of `N` plus the CRT constants for decryption.
#[derive(Clone)]
pub struct PaillierSecretKey {
    public: PaillierPublicKey,
    p: BigUint,
    q: BigUint,
    p_squared: BigUint,
    q_squared: BigUint,
    hp: BigUint,
    hq: BigUint,
    q_inv_p: BigUint,
    // (q^2)^{-1} mod p^2, for CRT recombination in owner-side encryption
    q2_inv_p2: BigUint,
}

impl std::fmt::Debug for PaillierSecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PaillierSecretKey")
            .field("key_id", &self.public.key_id)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub struct PaillierKeypair {
    pub public: PaillierPublicKey,
    pub secret: PaillierSecretKey,
}

impl PaillierKeypair {
    pub fn generate<R: RngCore + CryptoRng + ?Sized>(bits: u64, rng: &mut R) -> Result<Self> {
        check_bits(bits)?;
        loop {
            let p = gen_prime(bits / 2, rng);
            let q = gen_prime(bits / 2, rng);
            if p == q {
                continue;
            }
            let n = &p * &q;
            if n.bits() != bits {
                continue;
            }
            // gcd(N, (p-1)(q-1)) = 1 holds for equal-size primes, but check anyway.
            let phi = (&p - 1u32) * (&q - 1u32);
            if !n.gcd(&phi).is_one() {
                continue;
            }
            let secret = PaillierSecretKey::from_primes(p, q)?;
            return Ok(PaillierKeypair {
                public: secret.public.clone(),
                secret,
            });
        }
    }

    pub fn from_primes(p: BigUint, q: BigUint) -> Result<Self> {
        let secret = PaillierSecretKey::from_primes(p, q)?;
        Ok(PaillierKeypair {
            public: secret.public.clone(),
            secret,
        })
    }

    pub fn key_id(&self) -> KeyId {
        self.public.key_id
    }
}

pub(super) fn check_bits(bits: u64) -> Result<()> {
    if bits < MIN_KEY_BITS {
        return Err(CryptoError::Parameter(format!(
            "key size {bits} is below the minimum of {MIN_KEY_BITS} bits"
        )));
    }
    if !bits.is_multiple_of(2) {
        return Err(CryptoError::Parameter(format!(
            "key size {bits} must be even"
        )));
    }
    Ok(())
}

impl PaillierPublicKey {
    pub fn from_modulus(n: BigUint) -> Result<Self> {
        if n.bits() < 16 || n.is_even() {
            return Err(CryptoError::Parameter("invalid Paillier modulus".into()));
        }
        Ok(PaillierPublicKey {
            n_squared: &n * &n,
            half_n: &n >> 1u32,
            bits: n.bits(),
            key_id: KeyId::derive(Scheme::Paillier, &n),
            n,
        })
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn n_squared(&self) -> &BigUint {
        &self.n_squared
    }

    pub fn g(&self) -> BigUint {
        &self.n + 1u32
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn key_id(&self) -> KeyId {
        self.key_id
    }

    /// Maps a signed integer into `Z_N`, negatives to `N - |v|`.
    pub fn to_residue(&self, v: &BigInt) -> Result<BigUint> {
        if v.magnitude() > &self.half_n {
            return Err(CryptoError::PlaintextRange);
        }
        Ok(match v.sign() {
            Sign::Minus => &self.n - v.magnitude(),
            _ => v.magnitude().clone(),
        })
    }

    /// Inverse of [`to_residue`](Self::to_residue): residues above `N/2` are negative.
    pub fn from_residue(&self, m: &BigUint) -> BigInt {
        if m > &self.half_n {
            -BigInt::from_biguint(Sign::Plus, &self.n - m)
        } else {
            BigInt::from_biguint(Sign::Plus, m.clone())
        }
    }

    fn random_unit<R: RngCore + CryptoRng + ?Sized>(&self, rng: &mut R) -> BigUint {
        loop {
            let r = rng.gen_biguint_below(&self.n);
            if !r.is_zero() && r.gcd(&self.n).is_one() {
                return r;
            }
        }
    }

    /// `(1 + mN) mod N^2`, the deterministic part of an encryption.
    fn g_pow(&self, m: &BigUint) -> BigUint {
        (BigUint::one() + m * &self.n) % &self.n_squared
    }

    pub fn encrypt<R: RngCore + CryptoRng + ?Sized>(
        &self,
        m: &BigUint,
        rng: &mut R,
    ) -> Result<Ciphertext> {
        self.encrypt_scaled(m, 0, rng)
    }

    /// Encrypts a residue that represents a fixed-point value at `scale_exp`.
    pub fn encrypt_scaled<R: RngCore + CryptoRng + ?Sized>(
        &self,
        m: &BigUint,
        scale_exp: u32,
        rng: &mut R,
    ) -> Result<Ciphertext> {
        if m >= &self.n {
            return Err(CryptoError::PlaintextRange);
        }
        let r = self.random_unit(rng);
        let rn = r.modpow(&self.n, &self.n_squared);
        let c = (self.g_pow(m) * rn) % &self.n_squared;
        Ok(Ciphertext::new(c, Scheme::Paillier, self.key_id, scale_exp))
    }

    pub fn encrypt_signed<R: RngCore + CryptoRng + ?Sized>(
        &self,
        v: &BigInt,
        scale_exp: u32,
        rng: &mut R,
    ) -> Result<Ciphertext> {
        let m = self.to_residue(v)?;
        self.encrypt_scaled(&m, scale_exp, rng)
    }

    fn check(&self, c: &Ciphertext) -> Result<()> {
        c.expect(Scheme::Paillier, self.key_id)
    }

    /// `[[m1 + m2]] = [[m1]] * [[m2]] mod N^2`.
    pub fn add(&self, c1: &Ciphertext, c2: &Ciphertext) -> Result<Ciphertext> {
        self.check(c1)?;
        self.check(c2)?;
        if c1.scale_exp() != c2.scale_exp() {
            return Err(CryptoError::ScaleMismatch {
                left: c1.scale_exp(),
                right: c2.scale_exp(),
            });
        }
        let v = (c1.value() * c2.value()) % &self.n_squared;
        Ok(Ciphertext::new(v, Scheme::Paillier, self.key_id, c1.scale_exp()))
    }

    /// `[[-m]]`, the modular inverse of the ciphertext.
    pub fn negate(&self, c: &Ciphertext) -> Result<Ciphertext> {
        self.check(c)?;
        let inv = c
            .value()
            .modinv(&self.n_squared)
            .ok_or(CryptoError::NotInvertible)?;
        Ok(Ciphertext::new(inv, Scheme::Paillier, self.key_id, c.scale_exp()))
    }

    pub fn sub(&self, c1: &Ciphertext, c2: &Ciphertext) -> Result<Ciphertext> {
        let neg = self.negate(c2)?;
        self.add(c1, &neg)
    }

    /// Adds a known plaintext residue without fresh randomness.
    pub fn add_plain(&self, c: &Ciphertext, m: &BigUint) -> Result<Ciphertext> {
        self.check(c)?;
        if m >= &self.n {
            return Err(CryptoError::PlaintextRange);
        }
        let v = (c.value() * self.g_pow(m)) % &self.n_squared;
        Ok(Ciphertext::new(v, Scheme::Paillier, self.key_id, c.scale_exp()))
    }

    /// `[[k * m]] = [[m]]^k`; `k_scale` is the fixed-point scale of `k` and is
    /// added to the ciphertext's scale. Negative `k` goes through the inverse.
    pub fn scalar_mul(&self, c: &Ciphertext, k: &BigInt, k_scale: u32) -> Result<Ciphertext> {
        self.check(c)?;
        let base = if k.is_negative() {
            self.negate(c)?
        } else {
            c.clone()
        };
        let v = base.value().modpow(k.magnitude(), &self.n_squared);
        Ok(Ciphertext::new(
            v,
            Scheme::Paillier,
            self.key_id,
            c.scale_exp() + k_scale,
        ))
    }

    /// Fresh randomness on an existing ciphertext.
    pub fn rerandomize<R: RngCore + CryptoRng + ?Sized>(
        &self,
        c: &Ciphertext,
        rng: &mut R,
    ) -> Result<Ciphertext> {
        self.check(c)?;
        let r = self.random_unit(rng);
        let v = (c.value() * r.modpow(&self.n, &self.n_squared)) % &self.n_squared;
        Ok(Ciphertext::new(v, Scheme::Paillier, self.key_id, c.scale_exp()))
    }

    /// A trivially decryptable encryption of zero at `scale_exp`, useful as
    /// the identity of a homomorphic sum.
    pub fn zero(&self, scale_exp: u32) -> Ciphertext {
        Ciphertext::new(BigUint::one(), Scheme::Paillier, self.key_id, scale_exp)
    }
}

fn l_function(x: &BigUint, d: &BigUint) -> BigUint {
    (x - 1u32) / d
}

impl PaillierSecretKey {
    pub fn from_primes(p: BigUint, q: BigUint) -> Result<Self> {
        if p == q || p < BigUint::from(3u32) || q < BigUint::from(3u32) {
            return Err(CryptoError::Parameter("primes must be distinct and odd".into()));
        }
        let (p, q) = if p < q { (q, p) } else { (p, q) };
        let public = PaillierPublicKey::from_modulus(&p * &q)?;
        let p_squared = &p * &p;
        let q_squared = &q * &q;
        let g = public.g();
        let hp = l_function(&g.modpow(&(&p - 1u32), &p_squared), &p)
            .modinv(&p)
            .ok_or_else(|| CryptoError::Parameter("degenerate prime p".into()))?;
        let hq = l_function(&g.modpow(&(&q - 1u32), &q_squared), &q)
            .modinv(&q)
            .ok_or_else(|| CryptoError::Parameter("degenerate prime q".into()))?;
        let q_inv_p = q
            .modinv(&p)
            .ok_or_else(|| CryptoError::Parameter("p and q not coprime".into()))?;
        let q2_inv_p2 = q_squared
            .modinv(&p_squared)
            .ok_or_else(|| CryptoError::Parameter("p and q not coprime".into()))?;
        Ok(PaillierSecretKey {
            public,
            p,
            q,
            p_squared,
            q_squared,
            hp,
            hq,
            q_inv_p,
            q2_inv_p2,
        })
    }

    pub fn public(&self) -> &PaillierPublicKey {
        &self.public
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    /// `lambda = lcm(p - 1, q - 1)`.
    pub fn lambda(&self) -> BigUint {
        (&self.p - 1u32).lcm(&(&self.q - 1u32))
    }

    pub fn key_id(&self) -> KeyId {
        self.public.key_id
    }

    /// CRT decryption to the residue in `Z_N`.
    pub fn decrypt(&self, c: &Ciphertext) -> Result<BigUint> {
        c.expect(Scheme::Paillier, self.public.key_id)?;
        if c.value() >= &self.public.n_squared {
            return Err(CryptoError::PlaintextRange);
        }
        let mp = (l_function(&c.value().modpow(&(&self.p - 1u32), &self.p_squared), &self.p)
            * &self.hp)
            % &self.p;
        let mq = (l_function(&c.value().modpow(&(&self.q - 1u32), &self.q_squared), &self.q)
            * &self.hq)
            % &self.q;
        Ok(crt_combine(&mp, &mq, &self.p, &self.q, &self.q_inv_p))
    }

    /// Decrypts and maps the residue back to a signed integer.
    pub fn decrypt_signed(&self, c: &Ciphertext) -> Result<BigInt> {
        Ok(self.public.from_residue(&self.decrypt(c)?))
    }

    /// Encryption using the factorisation: `r^N mod N^2` is computed via
    /// CRT over `p^2` and `q^2`. Output distribution is identical to the
    /// public-key path.
    pub fn encrypt_scaled<R: RngCore + CryptoRng + ?Sized>(
        &self,
        m: &BigUint,
        scale_exp: u32,
        rng: &mut R,
    ) -> Result<Ciphertext> {
        let pk = &self.public;
        if m >= &pk.n {
            return Err(CryptoError::PlaintextRange);
        }
        let r = pk.random_unit(rng);
        let rp = (&r % &self.p_squared).modpow(&(&pk.n % (&self.p * (&self.p - 1u32))), &self.p_squared);
        let rq = (&r % &self.q_squared).modpow(&(&pk.n % (&self.q * (&self.q - 1u32))), &self.q_squared);
        let rn = crt_combine(&rp, &rq, &self.p_squared, &self.q_squared, &self.q2_inv_p2);
        let c = (pk.g_pow(m) * rn) % &pk.n_squared;
        Ok(Ciphertext::new(c, Scheme::Paillier, pk.key_id, scale_exp))
    }

    pub fn encrypt_signed<R: RngCore + CryptoRng + ?Sized>(
        &self,
        v: &BigInt,
        scale_exp: u32,
        rng: &mut R,
    ) -> Result<Ciphertext> {
        let m = self.public.to_residue(v)?;
        self.encrypt_scaled(&m, scale_exp, rng)
    }
}

/// `x ≡ a (mod m1)`, `x ≡ b (mod m2)` given `m2^{-1} mod m1`.
fn crt_combine(a: &BigUint, b: &BigUint, m1: &BigUint, m2: &BigUint, m2_inv_m1: &BigUint) -> BigUint {
    let b_mod = b % m1;
    let diff = if a >= &b_mod {
        a - &b_mod
    } else {
        a + m1 - &b_mod
    };
    let h = (diff * m2_inv_m1) % m1;
    b + h * m2
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn keypair(seed: u64) -> PaillierKeypair {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        PaillierKeypair::generate(256, &mut rng).unwrap()
    }

    #[test]
    fn rejects_small_or_odd_sizes() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert!(matches!(
            PaillierKeypair::generate(128, &mut rng),
            Err(CryptoError::Parameter(_))
        ));
        assert!(matches!(
            PaillierKeypair::generate(257, &mut rng),
            Err(CryptoError::Parameter(_))
        ));
    }

    #[test]
    fn round_trip_boundaries() {
        let kp = keypair(1);
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        assert_eq!(kp.public.bits(), 256);
        for m in [
            BigUint::zero(),
            BigUint::from(42u32),
            kp.public.n() - 1u32,
        ] {
            let c = kp.public.encrypt(&m, &mut rng).unwrap();
            assert_eq!(kp.secret.decrypt(&c).unwrap(), m);
            let c = kp.secret.encrypt_scaled(&m, 0, &mut rng).unwrap();
            assert_eq!(kp.secret.decrypt(&c).unwrap(), m);
        }
        assert!(matches!(
            kp.public.encrypt(kp.public.n(), &mut rng),
            Err(CryptoError::PlaintextRange)
        ));
    }

    #[test]
    fn decryption_matches_lambda_mu_formula() {
        let kp = keypair(2);
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let n = kp.public.n();
        let n2 = kp.public.n_squared();
        let lambda = kp.secret.lambda();
        let mu = l_function(&kp.public.g().modpow(&lambda, n2), n)
            .modinv(n)
            .unwrap();
        for _ in 0..20 {
            let m = rng.gen_biguint_below(n);
            let c = kp.public.encrypt(&m, &mut rng).unwrap();
            let textbook = (l_function(&c.value().modpow(&lambda, n2), n) * &mu) % n;
            assert_eq!(textbook, m);
        }
    }

    #[test]
    fn encryption_is_randomized() {
        let kp = keypair(3);
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let five = BigUint::from(5u32);
        let a = kp.public.encrypt(&five, &mut rng).unwrap();
        let b = kp.public.encrypt(&five, &mut rng).unwrap();
        assert_ne!(a.value(), b.value());
    }

    #[test]
    fn homomorphic_ops() {
        let kp = keypair(4);
        let pk = &kp.public;
        let mut rng = ChaCha20Rng::seed_from_u64(14);
        let enc = |v: i64, rng: &mut ChaCha20Rng| pk.encrypt_signed(&BigInt::from(v), 0, rng).unwrap();
        let dec = |c: &Ciphertext| kp.secret.decrypt_signed(c).unwrap();

        let sum = pk.add(&enc(2, &mut rng), &enc(3, &mut rng)).unwrap();
        assert_eq!(dec(&sum), BigInt::from(5));
        let ident = pk.add(&enc(9, &mut rng), &enc(0, &mut rng)).unwrap();
        assert_eq!(dec(&ident), BigInt::from(9));
        let diff = pk.sub(&enc(3, &mut rng), &enc(5, &mut rng)).unwrap();
        assert_eq!(dec(&diff), BigInt::from(-2));
        let prod = pk.scalar_mul(&enc(7, &mut rng), &BigInt::from(3), 0).unwrap();
        assert_eq!(dec(&prod), BigInt::from(21));
        let signed = pk.scalar_mul(&enc(-4, &mut rng), &BigInt::from(5), 0).unwrap();
        assert_eq!(dec(&signed), BigInt::from(-20));
        let neg_k = pk.scalar_mul(&enc(6, &mut rng), &BigInt::from(-7), 0).unwrap();
        assert_eq!(dec(&neg_k), BigInt::from(-42));
        let plus = pk.add_plain(&enc(10, &mut rng), &BigUint::from(5u32)).unwrap();
        assert_eq!(dec(&plus), BigInt::from(15));
        assert_eq!(dec(&pk.zero(0)), BigInt::zero());
        let fresh = pk.rerandomize(&plus, &mut rng).unwrap();
        assert_ne!(fresh.value(), plus.value());
        assert_eq!(dec(&fresh), BigInt::from(15));
    }

    #[test]
    fn scale_and_key_checks() {
        let kp = keypair(5);
        let other = keypair(6);
        let mut rng = ChaCha20Rng::seed_from_u64(15);
        let one = BigUint::one();
        let a = kp.public.encrypt_scaled(&one, 1, &mut rng).unwrap();
        let b = kp.public.encrypt_scaled(&one, 2, &mut rng).unwrap();
        assert!(matches!(
            kp.public.add(&a, &b),
            Err(CryptoError::ScaleMismatch { left: 1, right: 2 })
        ));
        let c = other.public.encrypt(&one, &mut rng).unwrap();
        assert!(matches!(kp.public.add(&a, &c), Err(CryptoError::KeyMismatch { .. })));
        assert!(matches!(kp.secret.decrypt(&c), Err(CryptoError::KeyMismatch { .. })));
        let scaled = kp.public.scalar_mul(&a, &BigInt::from(3), 2).unwrap();
        assert_eq!(scaled.scale_exp(), 3);
    }
}
