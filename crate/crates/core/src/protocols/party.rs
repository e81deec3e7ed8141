use rand::{CryptoRng, RngCore};

use super::{ProtocolError, Role};
use crate::crypto::{
    FixedPointCodec, PaillierKeypair, PaillierPublicKey, PaillierSecretKey, RsaKeypair,
    RsaPublicKey, RsaSecretKey,
};

/// The public half of a party's key material, as handed to its peer.
#[derive(Debug, Clone)]
pub struct PublicKeys {
    pub paillier: PaillierPublicKey,
    pub rsa: Option<RsaPublicKey>,
}

/// One side of a two-party protocol. Holds its own key pairs and only the
/// public keys of its peer.
#[derive(Debug, Clone)]
pub struct Party {
    role: Role,
    paillier: PaillierKeypair,
    rsa: Option<RsaKeypair>,
    peer: Option<PublicKeys>,
    codec: FixedPointCodec,
}

impl Party {
    pub fn new(
        role: Role,
        paillier: PaillierKeypair,
        rsa: Option<RsaKeypair>,
        codec: FixedPointCodec,
    ) -> Self {
        Party {
            role,
            paillier,
            rsa,
            peer: None,
            codec,
        }
    }

    /// Fresh keys. Alice needs an RSA pair for the multiplicative protocols;
    /// Bob only needs Paillier.
    pub fn generate<R: RngCore + CryptoRng + ?Sized>(
        role: Role,
        key_bits: u64,
        with_rsa: bool,
        codec: FixedPointCodec,
        rng: &mut R,
    ) -> Result<Self, ProtocolError> {
        let paillier = PaillierKeypair::generate(key_bits, rng)?;
        let rsa = if with_rsa {
            Some(RsaKeypair::generate(key_bits, rng)?)
        } else {
            None
        };
        Ok(Self::new(role, paillier, rsa, codec))
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn codec(&self) -> &FixedPointCodec {
        &self.codec
    }

    pub fn public_keys(&self) -> PublicKeys {
        PublicKeys {
            paillier: self.paillier.public.clone(),
            rsa: self.rsa.as_ref().map(|k| k.public.clone()),
        }
    }

    /// Same party, paired with a different peer.
    pub fn with_peer(&self, peer: PublicKeys) -> Party {
        Party {
            peer: Some(peer),
            ..self.clone()
        }
    }

    /// Exchanges public keys between two parties.
    pub fn connect(alice: &mut Party, bob: &mut Party) {
        alice.peer = Some(bob.public_keys());
        bob.peer = Some(alice.public_keys());
    }

    pub fn paillier_public(&self) -> &PaillierPublicKey {
        &self.paillier.public
    }

    pub(crate) fn paillier_secret(&self) -> &PaillierSecretKey {
        &self.paillier.secret
    }

    pub fn rsa_public(&self) -> Result<&RsaPublicKey, ProtocolError> {
        self.rsa
            .as_ref()
            .map(|k| &k.public)
            .ok_or(ProtocolError::MissingKey("own RSA key"))
    }

    pub(crate) fn rsa_secret(&self) -> Result<&RsaSecretKey, ProtocolError> {
        self.rsa
            .as_ref()
            .map(|k| &k.secret)
            .ok_or(ProtocolError::MissingKey("own RSA key"))
    }

    pub fn peer_paillier(&self) -> Result<&PaillierPublicKey, ProtocolError> {
        self.peer
            .as_ref()
            .map(|p| &p.paillier)
            .ok_or(ProtocolError::MissingKey("peer Paillier key"))
    }

    pub fn peer_rsa(&self) -> Result<&RsaPublicKey, ProtocolError> {
        self.peer
            .as_ref()
            .and_then(|p| p.rsa.as_ref())
            .ok_or(ProtocolError::MissingKey("peer RSA key"))
    }
}
