//! Secure two-party building blocks between Alice (data provider, key
//! owner) and Bob (data user).
//!
//! Both parties run in the caller's thread; every message goes through a
//! [`Session`], which records it in a [`ProtocolTranscript`]. Alice's values
//! stay under its keys except where a protocol explicitly hands it a
//! blinded value to decrypt.

mod blocks;
mod convert;
mod message;
mod party;
mod transcript;
mod transport;

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use crate::crypto::{Ciphertext, CryptoError};

pub use blocks::{secure_add, secure_dot, secure_mul, secure_pow, secure_pow_batch, secure_sub, Operand, PowOptions};
pub use convert::{
    convert_rsa_to_paillier, convert_rsa_to_paillier_blinded, rekey_paillier, rekey_mask_bound,
    BlindingRange, ConvertOptions,
};
pub use message::{Item, Message, RawMessage};
pub use party::{Party, PublicKeys};
pub use transcript::{ProtocolTranscript, TranscriptMode, TranscriptStats};
pub use transport::{InProcessTransport, Session, Transport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Alice,
    Bob,
}

/// Wire identifier of the protocol a message belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum ProtocolId {
    SecureAdd = 1,
    SecureSub = 2,
    SecureDot = 3,
    SecureMul = 4,
    SecurePow = 5,
    RsaToPaillier = 6,
    Rekey = 7,
    /// Per-iteration provider shares of secure logistic regression.
    LrShares = 8,
    /// Blinded sigmoid denominators and the provider's scaled replies.
    LrSigmoid = 9,
}

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("fixed-point scale mismatch: expected {expected}, found {found}")]
    ScaleMismatch { expected: u32, found: u32 },
    #[error("negative exponent {0}; split into positive and negative parts first")]
    NegativeExponent(i64),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("invalid protocol parameter: {0}")]
    Parameter(String),
    #[error("missing key: {0}")]
    MissingKey(&'static str),
    #[error("expected a {expected:?} message, received {found:?}")]
    UnexpectedMessage { expected: ProtocolId, found: ProtocolId },
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("transport failure: {0}")]
    Transport(String),
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

/// Inputs for [`run_protocol`]; Alice's private inputs come first.
#[derive(Debug, Clone)]
pub enum ProtocolInput {
    Add { a: Vec<f64>, b: Operand },
    Sub { a: Vec<f64>, b: Operand },
    Dot { a: Vec<f64>, b: Vec<f64> },
    Mul { a: Vec<f64>, b: Operand },
    Pow { a: Vec<f64>, b: Vec<i64>, options: PowOptions },
    Convert { inputs: Vec<Ciphertext>, options: ConvertOptions },
    Rekey { inputs: Vec<Ciphertext> },
}

impl ProtocolInput {
    pub fn id(&self) -> ProtocolId {
        match self {
            ProtocolInput::Add { .. } => ProtocolId::SecureAdd,
            ProtocolInput::Sub { .. } => ProtocolId::SecureSub,
            ProtocolInput::Dot { .. } => ProtocolId::SecureDot,
            ProtocolInput::Mul { .. } => ProtocolId::SecureMul,
            ProtocolInput::Pow { .. } => ProtocolId::SecurePow,
            ProtocolInput::Convert { .. } => ProtocolId::RsaToPaillier,
            ProtocolInput::Rekey { .. } => ProtocolId::Rekey,
        }
    }
}

/// Runs one protocol instance over a fresh in-process session. Returns the
/// ciphertexts Bob ends up holding and the transcript.
pub fn run_protocol<R: RngCore + CryptoRng + ?Sized>(
    alice: &Party,
    bob: &Party,
    input: &ProtocolInput,
    mode: TranscriptMode,
    rng: &mut R,
) -> Result<(Vec<Ciphertext>, ProtocolTranscript)> {
    let mut session = Session::in_process(mode);
    let out = match input {
        ProtocolInput::Add { a, b } => secure_add(alice, bob, &mut session, a, b, rng)?,
        ProtocolInput::Sub { a, b } => secure_sub(alice, bob, &mut session, a, b, rng)?,
        ProtocolInput::Dot { a, b } => vec![secure_dot(alice, bob, &mut session, a, b, rng)?],
        ProtocolInput::Mul { a, b } => secure_mul(alice, bob, &mut session, a, b)?,
        ProtocolInput::Pow { a, b, options } => {
            vec![secure_pow(alice, bob, &mut session, a, b, options)?]
        }
        ProtocolInput::Convert { inputs, options } => {
            convert_rsa_to_paillier(alice, bob, &mut session, inputs, None, options, rng)?
        }
        ProtocolInput::Rekey { inputs } => rekey_paillier(alice, bob, &mut session, inputs, rng)?,
    };
    Ok((out, session.into_transcript()))
}
