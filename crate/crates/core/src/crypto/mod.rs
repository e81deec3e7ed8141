//! Partially homomorphic cryptosystems and the fixed-point codec used to
//! carry real numbers through them.
//!
//! Paillier gives additive homomorphism over `Z_N` (ciphertexts live in
//! `Z_{N^2}`); textbook RSA gives multiplicative homomorphism over `Z_N`.
//! Every [`Ciphertext`] carries a scale ledger (`scale_exp`): the plaintext
//! integer represents `value / Q^scale_exp` for the codec scale `Q`.

mod codec;
mod keyfile;
mod paillier;
mod prime;
mod rsa;

use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use codec::{ln_biguint, FixedPointCodec, DEFAULT_SCALE};
pub use keyfile::{KeyFile, KeyMaterial};
pub use paillier::{PaillierKeypair, PaillierPublicKey, PaillierSecretKey};
pub use prime::{gen_prime, is_probable_prime, MILLER_RABIN_ROUNDS};
pub use rsa::{RsaKeypair, RsaPublicKey, RsaSecretKey, RSA_PUBLIC_EXPONENT};

/// Smallest modulus size accepted by key generation.
pub const MIN_KEY_BITS: u64 = 256;
/// Default modulus size for both schemes.
pub const DEFAULT_KEY_BITS: u64 = 2048;
/// Fast profile used by tests and quick experiments.
pub const TEST_KEY_BITS: u64 = 512;

#[derive(Debug, thiserror::Error)]
pub enum CryptoError {
    #[error("invalid key parameters: {0}")]
    Parameter(String),
    #[error("ciphertext scheme {found:?} does not match expected {expected:?}")]
    SchemeMismatch { expected: Scheme, found: Scheme },
    #[error("ciphertext key {found} does not match key {expected}")]
    KeyMismatch { expected: KeyId, found: KeyId },
    #[error("fixed-point scale mismatch: {left} vs {right}")]
    ScaleMismatch { left: u32, right: u32 },
    #[error("scale exponent {scale_exp} overflows the plaintext space of a {key_bits}-bit key")]
    ScaleOverflow { scale_exp: u32, key_bits: u64 },
    #[error("plaintext out of range for the key modulus")]
    PlaintextRange,
    #[error("value is not invertible modulo N")]
    NotInvertible,
    #[error("non-finite real value {0}")]
    NonFinite(f64),
    #[error("missing secret key material")]
    MissingSecret,
    #[error("malformed key file: {0}")]
    KeyFile(String),
}

pub type Result<T> = std::result::Result<T, CryptoError>;

/// Which cryptosystem produced a ciphertext.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Paillier,
    Rsa,
}

impl Scheme {
    fn tag(self) -> u8 {
        match self {
            Scheme::Paillier => 1,
            Scheme::Rsa => 2,
        }
    }
}

/// Opaque key identity: the first eight bytes of SHA-256 over the scheme tag
/// and the big-endian modulus.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KeyId([u8; 8]);

impl KeyId {
    pub fn derive(scheme: Scheme, modulus: &BigUint) -> Self {
        let mut hasher = Sha256::new();
        hasher.update([scheme.tag()]);
        hasher.update(modulus.to_bytes_be());
        let digest = hasher.finalize();
        let mut id = [0u8; 8];
        id.copy_from_slice(&digest[..8]);
        KeyId(id)
    }

    pub fn as_bytes(&self) -> &[u8; 8] {
        &self.0
    }
}

impl fmt::Display for KeyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for KeyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KeyId({self})")
    }
}

/// A Paillier or RSA ciphertext tagged with its key and fixed-point scale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    value: BigUint,
    scheme: Scheme,
    key_id: KeyId,
    scale_exp: u32,
}

impl Ciphertext {
    pub(crate) fn new(value: BigUint, scheme: Scheme, key_id: KeyId, scale_exp: u32) -> Self {
        Ciphertext {
            value,
            scheme,
            key_id,
            scale_exp,
        }
    }

    /// Rebuilds a ciphertext received as raw bytes; the caller vouches for the
    /// metadata (it is implied by the protocol step that carried it).
    pub fn from_parts(value: BigUint, scheme: Scheme, key_id: KeyId, scale_exp: u32) -> Self {
        Self::new(value, scheme, key_id, scale_exp)
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn key_id(&self) -> KeyId {
        self.key_id
    }

    pub fn scale_exp(&self) -> u32 {
        self.scale_exp
    }

    /// Same ciphertext with a different scale label. The plaintext is
    /// untouched; only its interpretation changes.
    pub fn relabel_scale(mut self, scale_exp: u32) -> Self {
        self.scale_exp = scale_exp;
        self
    }

    pub(crate) fn expect(&self, scheme: Scheme, key_id: KeyId) -> Result<()> {
        if self.scheme != scheme {
            return Err(CryptoError::SchemeMismatch {
                expected: scheme,
                found: self.scheme,
            });
        }
        if self.key_id != key_id {
            return Err(CryptoError::KeyMismatch {
                expected: key_id,
                found: self.key_id,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_id_depends_on_scheme_and_modulus() {
        let n = BigUint::from(3233u32);
        let a = KeyId::derive(Scheme::Paillier, &n);
        let b = KeyId::derive(Scheme::Rsa, &n);
        let c = KeyId::derive(Scheme::Paillier, &BigUint::from(3127u32));
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, KeyId::derive(Scheme::Paillier, &n));
        assert_eq!(a.to_string().len(), 16);
    }
}
