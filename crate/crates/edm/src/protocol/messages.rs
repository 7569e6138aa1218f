//! Frame tags and body codecs for the protocol messages.
//!
//! Bodies are little-endian throughout. Ciphertext lists are a `u32` count
//! followed by the ciphertexts' own self-delimiting encodings; decoding is
//! strict, so a count that disagrees with the body length is an error.

use crate::he2::{Ciphertext, Level, PublicKey};
use crate::transport::Frame;

use super::ProtocolError;

/// Message tags, in protocol order.
pub mod tags {
    /// Public-key exchange.
    pub const SETUP: u8 = 0x00;
    /// Phase 1: encrypted membership bit vector over the hash range.
    pub const ENC_BITS: u8 = 0x01;
    /// Phase 1: blinded prefix-sum snapshots, for the key holder to decrypt.
    pub const BLINDED_RANKS: u8 = 0x02;
    /// Phase 1: the decrypted (still blinded) snapshots coming back.
    pub const DECRYPTED_RANKS: u8 = 0x03;
    /// Phase 2: union cardinality announcement.
    pub const UNION_CARDINALITY: u8 = 0x04;
    /// Phase 2: party A's encrypted characteristic vector.
    pub const ENC_VECTOR: u8 = 0x05;
    /// Phase 2: sign-flipped, shuffled encrypted differences.
    pub const BLINDED_DIFFS: u8 = 0x06;
}

pub(super) fn peer(msg: impl Into<String>) -> ProtocolError {
    ProtocolError::Peer(msg.into())
}

/// `count` + concatenated ciphertexts.
pub(super) fn encode_ciphertexts(tag: u8, cts: &[Ciphertext]) -> Frame {
    let mut body = Vec::new();
    body.extend_from_slice(&(cts.len() as u32).to_le_bytes());
    for ct in cts {
        body.extend_from_slice(&ct.to_bytes());
    }
    Frame::new(tag, body)
}

/// Strictly decode a ciphertext list under `pk`, enforcing an exact count
/// and a uniform level.
pub(super) fn decode_ciphertexts(
    pk: &PublicKey,
    body: &[u8],
    expect_count: usize,
    expect_level: Level,
) -> Result<Vec<Ciphertext>, ProtocolError> {
    let (count, mut rest) = split_count(body)?;
    if count != expect_count {
        return Err(peer(format!(
            "ciphertext list holds {count} entries, expected {expect_count}"
        )));
    }
    let mut cts = Vec::with_capacity(count);
    for _ in 0..count {
        if rest.len() < 9 {
            return Err(peer("ciphertext list truncated"));
        }
        let payload_len =
            u32::from_le_bytes(rest[5..9].try_into().expect("4 bytes")) as usize;
        let total = 9usize
            .checked_add(payload_len)
            .filter(|&t| t <= rest.len())
            .ok_or_else(|| peer("ciphertext list truncated"))?;
        let ct = pk.ciphertext_from_bytes(&rest[..total])?;
        if ct.level() != expect_level {
            return Err(peer(format!(
                "ciphertext at level {}, expected {expect_level}",
                ct.level()
            )));
        }
        cts.push(ct);
        rest = &rest[total..];
    }
    if !rest.is_empty() {
        return Err(peer("trailing bytes after ciphertext list"));
    }
    Ok(cts)
}

/// Decode a ciphertext list whose count the receiver cannot predict,
/// subject to an upper bound.
pub(super) fn decode_ciphertexts_counted(
    pk: &PublicKey,
    body: &[u8],
    max_count: usize,
    expect_level: Level,
) -> Result<Vec<Ciphertext>, ProtocolError> {
    let (count, _) = split_count(body)?;
    if count > max_count {
        return Err(peer(format!(
            "ciphertext list holds {count} entries, more than the {max_count} allowed"
        )));
    }
    decode_ciphertexts(pk, body, count, expect_level)
}

pub(super) fn encode_i64s(tag: u8, values: &[i64]) -> Frame {
    let mut body = Vec::with_capacity(4 + 8 * values.len());
    body.extend_from_slice(&(values.len() as u32).to_le_bytes());
    for v in values {
        body.extend_from_slice(&v.to_le_bytes());
    }
    Frame::new(tag, body)
}

pub(super) fn decode_i64s(body: &[u8], expect_count: usize) -> Result<Vec<i64>, ProtocolError> {
    let (count, rest) = split_count(body)?;
    if count != expect_count {
        return Err(peer(format!(
            "value list holds {count} entries, expected {expect_count}"
        )));
    }
    if rest.len() != 8 * count {
        return Err(peer("value list length mismatch"));
    }
    Ok(rest
        .chunks_exact(8)
        .map(|c| i64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

pub(super) fn encode_u64(tag: u8, value: u64) -> Frame {
    Frame::new(tag, value.to_le_bytes().to_vec())
}

pub(super) fn decode_u64(body: &[u8]) -> Result<u64, ProtocolError> {
    let arr: [u8; 8] = body
        .try_into()
        .map_err(|_| peer("cardinality body must be 8 bytes"))?;
    Ok(u64::from_le_bytes(arr))
}

fn split_count(body: &[u8]) -> Result<(usize, &[u8]), ProtocolError> {
    if body.len() < 4 {
        return Err(peer("list body shorter than its count field"));
    }
    let count = u32::from_le_bytes(body[..4].try_into().expect("4 bytes")) as usize;
    Ok((count, &body[4..]))
}
