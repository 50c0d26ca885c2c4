use std::fmt;

use serde::Serialize;

use super::ProtocolError;
use crate::field::{FieldElement, FieldModulus};
use crate::symbol::Symbol;

const CLIENT_BIT: u32 = 0x8000_0000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Party {
    Client(usize),
    Database(usize),
}

impl Party {
    /// Wire code: databases by id, clients by id with the top bit set.
    pub fn code(self) -> u32 {
        match self {
            Party::Database(j) => j as u32,
            Party::Client(i) => CLIENT_BIT | i as u32,
        }
    }

    pub fn from_code(code: u32) -> Party {
        if code & CLIENT_BIT != 0 {
            Party::Client((code & !CLIENT_BIT) as usize)
        } else {
            Party::Database(code as usize)
        }
    }

    pub fn is_database(self) -> bool {
        matches!(self, Party::Database(_))
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Client(i) => write!(f, "client{i}"),
            Party::Database(j) => write!(f, "db{j}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum MessageKind {
    /// Server-side randomness distributed to clients.
    CrgBroadcast,
    /// Client shares that set up a partial randomness held by a database group.
    CrgSeed,
    /// Masked submodel-selection vector.
    Au1,
    /// Group aggregate of selection answers.
    Du2,
    /// Routed selection aggregate.
    Au2,
    /// Stored symbols returned for the client's read request.
    Dw1,
    /// Masked increments.
    Aw1,
    /// Group aggregate of increments.
    Dw2,
    /// Routed update for one target database.
    Aw2,
    /// Server-randomness correction forwarded to a replacement database.
    CrCorrection,
    /// Helper share for rebuilding a failed database.
    RepairShare,
    /// Client share refreshing server-side randomness.
    CrrShare,
}

impl MessageKind {
    pub fn code(self) -> u32 {
        self as u32
    }

    pub fn from_code(code: u32) -> Option<MessageKind> {
        use MessageKind::*;
        [CrgBroadcast, CrgSeed, Au1, Du2, Au2, Dw1, Aw1, Dw2, Aw2, CrCorrection, RepairShare, CrrShare]
            .into_iter()
            .find(|k| k.code() == code)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseMessage<S> {
    pub kind: MessageKind,
    pub sender: Party,
    pub receiver: Party,
    pub payload: Vec<S>,
}

impl<S: Symbol> PhaseMessage<S> {
    pub fn new(kind: MessageKind, sender: Party, receiver: Party, payload: Vec<S>) -> Self {
        PhaseMessage {
            kind,
            sender,
            receiver,
            payload,
        }
    }

    /// 16-byte little-endian header `(kind, sender, receiver, length)`
    /// followed by one little-endian `u32` per payload symbol.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.payload.len());
        for word in [
            self.kind.code(),
            self.sender.code(),
            self.receiver.code(),
            self.payload.len() as u32,
        ] {
            out.extend_from_slice(&word.to_le_bytes());
        }
        for s in &self.payload {
            out.extend_from_slice(&s.value().value().to_le_bytes());
        }
        out
    }
}

/// Parses one framed message, rejecting truncated or out-of-field payloads.
pub fn decode_message(q: FieldModulus, bytes: &[u8]) -> Result<PhaseMessage<FieldElement>, ProtocolError> {
    let word = |i: usize| -> Result<u32, ProtocolError> {
        let b = bytes
            .get(4 * i..4 * i + 4)
            .ok_or_else(|| ProtocolError::Shape(format!("message truncated at word {i}")))?;
        Ok(u32::from_le_bytes(b.try_into().expect("four bytes")))
    };
    let kind = MessageKind::from_code(word(0)?)
        .ok_or_else(|| ProtocolError::Shape(format!("unknown message kind {}", word(0).unwrap_or(0))))?;
    let len = word(3)? as usize;
    if bytes.len() != 16 + 4 * len {
        return Err(ProtocolError::Shape(format!(
            "header announces {len} symbols but {} payload bytes follow",
            bytes.len().saturating_sub(16)
        )));
    }
    let payload = (0..len)
        .map(|t| {
            let v = word(4 + t)?;
            if v >= q.get() {
                return Err(ProtocolError::Shape(format!("symbol {v} outside F_{q}")));
            }
            Ok(q.elem(v as u64))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PhaseMessage {
        kind,
        sender: Party::from_code(word(1)?),
        receiver: Party::from_code(word(2)?),
        payload,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_round_trip() {
        let q = FieldModulus::new(13).unwrap();
        let m = PhaseMessage::new(
            MessageKind::Aw2,
            Party::Client(3),
            Party::Database(2),
            vec![q.elem(4), q.elem(12)],
        );
        let bytes = m.to_bytes();
        assert_eq!(bytes.len(), 24);
        assert_eq!(decode_message(q, &bytes).unwrap(), m);
        assert!(decode_message(q, &bytes[..20]).is_err());
    }
}
