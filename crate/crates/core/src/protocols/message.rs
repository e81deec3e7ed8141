use num_bigint::BigUint;

use super::{ProtocolError, ProtocolId, Role};
use crate::crypto::Ciphertext;

/// One payload element. Ciphertext metadata (scheme, key, scale) travels out
/// of band: it is fixed by the protocol step that carries the item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Cipher(Ciphertext),
    Plain(BigUint),
}

impl Item {
    pub fn value(&self) -> &BigUint {
        match self {
            Item::Cipher(c) => c.value(),
            Item::Plain(v) => v,
        }
    }

    pub fn into_cipher(self) -> Result<Ciphertext, ProtocolError> {
        match self {
            Item::Cipher(c) => Ok(c),
            Item::Plain(_) => Err(ProtocolError::Malformed("expected a ciphertext item".into())),
        }
    }

    fn wire_len(&self) -> usize {
        4 + byte_len(self.value())
    }
}

fn byte_len(v: &BigUint) -> usize {
    (v.bits() as usize).div_ceil(8).max(1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub protocol: ProtocolId,
    pub step: u32,
    pub sender: Role,
    pub payload: Vec<Item>,
}

/// A message as recovered from bytes: payloads are bare integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawMessage {
    pub protocol_id: u8,
    pub step: u8,
    pub items: Vec<BigUint>,
}

const HEADER_LEN: usize = 4 + 1 + 1 + 2;

impl Message {
    /// Size of [`encode`](Self::encode) without building the buffer.
    pub fn wire_len(&self) -> usize {
        HEADER_LEN + self.payload.iter().map(Item::wire_len).sum::<usize>()
    }

    /// `u32 length | u8 protocol_id | u8 step | u16 payload_count | items`,
    /// each item a `u32` length followed by big-endian bytes. The leading
    /// length counts the bytes after itself. The step byte is the low eight
    /// bits of the transcript step.
    pub fn encode(&self) -> Result<Vec<u8>, ProtocolError> {
        let count = u16::try_from(self.payload.len())
            .map_err(|_| ProtocolError::Malformed("too many payload items".into()))?;
        let total = self.wire_len();
        let body = u32::try_from(total - 4)
            .map_err(|_| ProtocolError::Malformed("message too large".into()))?;
        let mut out = Vec::with_capacity(total);
        out.extend_from_slice(&body.to_be_bytes());
        out.push(self.protocol as u8);
        out.push((self.step & 0xff) as u8);
        out.extend_from_slice(&count.to_be_bytes());
        for item in &self.payload {
            let bytes = item.value().to_bytes_be();
            out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
            out.extend_from_slice(&bytes);
        }
        Ok(out)
    }
}

impl RawMessage {
    pub fn decode(buf: &[u8]) -> Result<Self, ProtocolError> {
        let short = || ProtocolError::Malformed("truncated message".into());
        let take4 = |at: usize| -> Result<u32, ProtocolError> {
            let b = buf.get(at..at + 4).ok_or_else(short)?;
            Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        };
        if buf.len() < HEADER_LEN {
            return Err(short());
        }
        let body = take4(0)? as usize;
        if body + 4 != buf.len() {
            return Err(ProtocolError::Malformed("length prefix mismatch".into()));
        }
        let protocol_id = buf[4];
        let step = buf[5];
        let count = u16::from_be_bytes([buf[6], buf[7]]) as usize;
        let mut at = HEADER_LEN;
        let mut items = Vec::with_capacity(count);
        for _ in 0..count {
            let len = take4(at)? as usize;
            at += 4;
            let bytes = buf.get(at..at + len).ok_or_else(short)?;
            items.push(BigUint::from_bytes_be(bytes));
            at += len;
        }
        if at != buf.len() {
            return Err(ProtocolError::Malformed("trailing bytes".into()));
        }
        Ok(RawMessage {
            protocol_id,
            step,
            items,
        })
    }
}
