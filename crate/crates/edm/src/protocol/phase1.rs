//! Phase 1: both parties learn the rank of each of their own labels in the
//! sorted union of the two label sets, in three rounds.

use super::messages::{self, peer, tags};
use super::{Courier, Phase1Result, ProtocolConfig, ProtocolError};
use crate::he2::{self, Ciphertext, KeyPair, Level, PublicKey};
use crate::metrics::Phase;
use crate::transport::Frame;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use std::collections::BTreeMap;

/// Everything phase 2 needs to continue under the same keys.
pub(super) struct Phase1State {
    pub ranks: BTreeMap<u64, u64>,
    pub union_size: Option<u64>,
    pub own: KeyPair,
    pub peer_pk: PublicKey,
}

impl Phase1State {
    pub(super) fn into_result(self) -> Phase1Result {
        Phase1Result { ranks: self.ranks, union_size: self.union_size }
    }
}

pub(super) fn run(
    labels: &[u64],
    cfg: &ProtocolConfig,
    rng: &mut ChaCha20Rng,
    courier: &mut Courier<'_>,
) -> Result<Phase1State, ProtocolError> {
    cfg.validate()?;
    let m = cfg.hash.m as usize;
    let mut labels: Vec<u64> = labels.to_vec();
    labels.sort_unstable();
    labels.dedup();
    if let Some(&big) = labels.last() {
        if big >= m as u64 {
            return Err(ProtocolError::Config(format!(
                "label {big} outside the hash range 0..{m}"
            )));
        }
    }
    let bound = cfg.effective_bound()?;
    let blind_range = cfg.blind_range()?;
    let n_cap = cfg.effective_n_cap();

    // Key exchange.
    let own = he2::keygen(cfg.backend, cfg.security_bits, bound, rng)?;
    courier.send(Phase::Setup, Frame::new(tags::SETUP, own.public.to_bytes()))?;
    let peer_pk = PublicKey::from_bytes(&courier.expect(tags::SETUP)?.body)?;
    if peer_pk.kind() != cfg.backend {
        return Err(peer("peer key uses a different backend"));
    }
    if peer_pk.bound() != bound {
        return Err(peer(format!(
            "peer plaintext window {} differs from ours ({bound})",
            peer_pk.bound()
        )));
    }
    if peer_pk.key_id() == own.public.key_id() {
        return Err(peer("peer key id collides with ours"));
    }

    // Round 1: membership bits over the whole hash range, under our key.
    let mut bits = vec![0i64; m];
    for &l in &labels {
        bits[l as usize] = 1;
    }
    let own_bits: Vec<Ciphertext> = bits
        .iter()
        .map(|&b| own.public.encrypt(b, Level::One, rng))
        .collect::<Result<_, _>>()?;
    courier.send(Phase::Phase1, messages::encode_ciphertexts(tags::ENC_BITS, &own_bits))?;
    drop(own_bits);
    let peer_bits = messages::decode_ciphertexts(
        &peer_pk,
        &courier.expect(tags::ENC_BITS)?.body,
        m,
        Level::One,
    )?;

    // Under the peer's key: union bit, then running prefix sums, snapshotted
    // at our own labels. The snapshot after position v is v's rank in the
    // sorted union; the snapshot after the last position is the union size.
    let mut acc = peer_pk.encrypt(0, Level::Two, rng)?;
    let mut snapshots: Vec<Ciphertext> = Vec::with_capacity(labels.len() + 1);
    let mut next_label = 0usize;
    for (j, theirs) in peer_bits.iter().enumerate() {
        let mine = peer_pk.encrypt(bits[j], Level::One, rng)?;
        let union_bit = peer_pk.encrypted_or(&mine, theirs)?;
        acc = peer_pk.add(&acc, &union_bit)?;
        if next_label < labels.len() && labels[next_label] == j as u64 {
            snapshots.push(acc.clone());
            next_label += 1;
        }
    }
    let probe = !labels.is_empty();
    if probe {
        snapshots.push(acc);
    }

    // Round 2: blind every snapshot with a fresh one-time offset and send
    // them to their key holder.
    let blinds: Vec<i64> = (0..snapshots.len())
        .map(|_| rng.gen_range(0..blind_range) as i64)
        .collect();
    let blinded: Vec<Ciphertext> = snapshots
        .iter()
        .zip(&blinds)
        .map(|(s, &r)| peer_pk.add(s, &peer_pk.encrypt(r, Level::Two, rng)?))
        .collect::<Result<_, _>>()?;
    courier.send(Phase::Phase1, messages::encode_ciphertexts(tags::BLINDED_RANKS, &blinded))?;
    let peer_queries = messages::decode_ciphertexts_counted(
        &own.public,
        &courier.expect(tags::BLINDED_RANKS)?.body,
        m + 1,
        Level::Two,
    )?;

    // Round 3: decrypt the peer's blinded queries; collect our own answers.
    let answers: Vec<i64> = peer_queries
        .iter()
        .map(|c| own.secret.decrypt(c))
        .collect::<Result<_, _>>()?;
    courier.send(Phase::Phase1, messages::encode_i64s(tags::DECRYPTED_RANKS, &answers))?;
    let decrypted =
        messages::decode_i64s(&courier.expect(tags::DECRYPTED_RANKS)?.body, blinds.len())?;

    // Unblind. The probe (last entry, when present) carries the union size;
    // the rest are the ranks of our labels in ascending label order.
    let unblinded: Vec<i64> = decrypted.iter().zip(&blinds).map(|(v, r)| v - r).collect();
    let union_size = if probe {
        let n = *unblinded.last().expect("probe present");
        if n < labels.len() as i64 || n as u64 > n_cap {
            return Err(peer(format!(
                "union cardinality {n} outside [{}, {n_cap}]",
                labels.len()
            )));
        }
        Some(n as u64)
    } else {
        None
    };
    let mut ranks = BTreeMap::new();
    let mut previous = 0i64;
    for (&label, &rank) in labels.iter().zip(&unblinded) {
        let n = union_size.expect("labels imply a probe") as i64;
        if rank <= previous || rank > n {
            return Err(peer(format!(
                "rank {rank} for label {label} breaks the expected order"
            )));
        }
        previous = rank;
        ranks.insert(label, rank as u64);
    }
    Ok(Phase1State { ranks, union_size, own, peer_pk })
}
