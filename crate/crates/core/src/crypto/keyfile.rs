use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::{
    CryptoError, PaillierKeypair, PaillierPublicKey, Result, RsaKeypair, RsaPublicKey, Scheme,
};

/// On-disk key representation. Integers are base64url (no padding) encodings
/// of their big-endian bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyFile {
    pub scheme: Scheme,
    pub bits: u64,
    pub n: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<String>,
}

/// Parsed contents of a [`KeyFile`].
#[derive(Debug, Clone)]
pub enum KeyMaterial {
    PaillierPublic(PaillierPublicKey),
    PaillierPair(PaillierKeypair),
    RsaPublic(RsaPublicKey),
    RsaPair(RsaKeypair),
}

fn enc(v: &BigUint) -> String {
    URL_SAFE_NO_PAD.encode(v.to_bytes_be())
}

fn dec(field: &str, s: &Option<String>) -> Result<BigUint> {
    let s = s
        .as_ref()
        .ok_or_else(|| CryptoError::KeyFile(format!("missing field `{field}`")))?;
    let bytes = URL_SAFE_NO_PAD
        .decode(s)
        .map_err(|e| CryptoError::KeyFile(format!("field `{field}`: {e}")))?;
    Ok(BigUint::from_bytes_be(&bytes))
}

impl KeyFile {
    pub fn from_paillier_public(pk: &PaillierPublicKey) -> Self {
        KeyFile {
            scheme: Scheme::Paillier,
            bits: pk.bits(),
            n: enc(pk.n()),
            g: Some(enc(&pk.g())),
            e: None,
            p: None,
            q: None,
            d: None,
        }
    }

    pub fn from_paillier(kp: &PaillierKeypair) -> Self {
        KeyFile {
            p: Some(enc(kp.secret.p())),
            q: Some(enc(kp.secret.q())),
            ..Self::from_paillier_public(&kp.public)
        }
    }

    pub fn from_rsa_public(pk: &RsaPublicKey) -> Self {
        KeyFile {
            scheme: Scheme::Rsa,
            bits: pk.bits(),
            n: enc(pk.n()),
            g: None,
            e: Some(enc(pk.e())),
            p: None,
            q: None,
            d: None,
        }
    }

    pub fn from_rsa(kp: &RsaKeypair) -> Self {
        KeyFile {
            p: Some(enc(kp.secret.p())),
            q: Some(enc(kp.secret.q())),
            d: Some(enc(kp.secret.d())),
            ..Self::from_rsa_public(&kp.public)
        }
    }

    pub fn has_secret(&self) -> bool {
        self.p.is_some() && self.q.is_some()
    }

    /// Rebuilds keys, checking that the stored components are consistent.
    pub fn to_material(&self) -> Result<KeyMaterial> {
        let n = BigUint::from_bytes_be(
            &URL_SAFE_NO_PAD
                .decode(&self.n)
                .map_err(|e| CryptoError::KeyFile(format!("field `n`: {e}")))?,
        );
        match self.scheme {
            Scheme::Paillier => {
                if let Some(g) = &self.g {
                    if dec("g", &Some(g.clone()))? != &n + 1u32 {
                        return Err(CryptoError::KeyFile("generator must be N+1".into()));
                    }
                }
                if self.has_secret() {
                    let kp = PaillierKeypair::from_primes(dec("p", &self.p)?, dec("q", &self.q)?)?;
                    if kp.public.n() != &n {
                        return Err(CryptoError::KeyFile("p*q does not match n".into()));
                    }
                    Ok(KeyMaterial::PaillierPair(kp))
                } else {
                    Ok(KeyMaterial::PaillierPublic(PaillierPublicKey::from_modulus(n)?))
                }
            }
            Scheme::Rsa => {
                let e = dec("e", &self.e)?;
                if self.has_secret() {
                    let kp = RsaKeypair::from_primes(dec("p", &self.p)?, dec("q", &self.q)?, e)?;
                    if kp.public.n() != &n {
                        return Err(CryptoError::KeyFile("p*q does not match n".into()));
                    }
                    if let Some(d) = &self.d {
                        if &dec("d", &Some(d.clone()))? != kp.secret.d() {
                            return Err(CryptoError::KeyFile("d does not match p, q, e".into()));
                        }
                    }
                    Ok(KeyMaterial::RsaPair(kp))
                } else {
                    Ok(KeyMaterial::RsaPublic(RsaPublicKey::new(n, e)?))
                }
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("key file serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| CryptoError::KeyFile(e.to_string()))
    }
}
