//! Phase 2: party A learns the L1 distance between the characteristic
//! vectors, expressed in the consistent label space from phase 1, in two
//! rounds.

use super::messages::{self, peer, tags};
use super::phase1::Phase1State;
use super::{Courier, ProtocolError};
use crate::esp::CharacteristicVector;
use crate::he2::{Ciphertext, Level};
use crate::metrics::Phase;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

/// Spread this party's per-label counts into the dense rank-indexed vector
/// of length n. Positions owned only by the peer stay zero.
fn dense_vector(
    state: &Phase1State,
    counts: &CharacteristicVector,
    n: usize,
) -> Result<Vec<i64>, ProtocolError> {
    let mut v = vec![0i64; n];
    for (&label, &count) in &counts.counts {
        let rank = *state
            .ranks
            .get(&label)
            .ok_or_else(|| peer(format!("label {label} was never ranked")))?;
        let count = i64::try_from(count)
            .map_err(|_| ProtocolError::Config(format!("count for label {label} overflows")))?;
        v[(rank - 1) as usize] = count;
    }
    Ok(v)
}

fn union_size(state: &Phase1State) -> Result<usize, ProtocolError> {
    let n = state.union_size.ok_or_else(|| peer("no union cardinality to work in"))?;
    if n == 0 {
        return Err(peer("empty union has no vectors to compare"));
    }
    Ok(n as usize)
}

/// Party A: publish the encrypted vector, then decrypt the sign-flipped,
/// shuffled differences and sum their magnitudes.
pub(super) fn run_a(
    state: &Phase1State,
    counts: &CharacteristicVector,
    rng: &mut ChaCha20Rng,
    courier: &mut Courier<'_>,
) -> Result<u64, ProtocolError> {
    let n = union_size(state)?;
    let v = dense_vector(state, counts, n)?;
    courier.send(
        Phase::Phase2,
        messages::encode_u64(tags::UNION_CARDINALITY, n as u64),
    )?;
    let enc: Vec<Ciphertext> = v
        .iter()
        .map(|&x| state.own.public.encrypt(x, Level::One, rng))
        .collect::<Result<_, _>>()?;
    courier.send(Phase::Phase2, messages::encode_ciphertexts(tags::ENC_VECTOR, &enc))?;
    let peer_n =
        messages::decode_u64(&courier.expect(tags::UNION_CARDINALITY)?.body)?;
    if peer_n != n as u64 {
        return Err(peer(format!(
            "peer reports union cardinality {peer_n}, we derived {n}"
        )));
    }
    let diffs = messages::decode_ciphertexts(
        &state.own.public,
        &courier.expect(tags::BLINDED_DIFFS)?.body,
        n,
        Level::One,
    )?;
    let mut total = 0u64;
    for ct in &diffs {
        total += state.own.secret.decrypt(ct)?.unsigned_abs();
    }
    Ok(total)
}

/// Party B: subtract its vector under A's key, mask signs and order, and
/// send the differences back.
pub(super) fn run_b(
    state: &Phase1State,
    counts: &CharacteristicVector,
    rng: &mut ChaCha20Rng,
    courier: &mut Courier<'_>,
) -> Result<(), ProtocolError> {
    let n = union_size(state)?;
    let v = dense_vector(state, counts, n)?;
    courier.send(
        Phase::Phase2,
        messages::encode_u64(tags::UNION_CARDINALITY, n as u64),
    )?;
    let peer_n =
        messages::decode_u64(&courier.expect(tags::UNION_CARDINALITY)?.body)?;
    if peer_n != n as u64 {
        return Err(peer(format!(
            "peer reports union cardinality {peer_n}, we derived {n}"
        )));
    }
    let enc_a = messages::decode_ciphertexts(
        &state.peer_pk,
        &courier.expect(tags::ENC_VECTOR)?.body,
        n,
        Level::One,
    )?;
    let mut diffs: Vec<Ciphertext> = Vec::with_capacity(n);
    for (ct_a, &mine) in enc_a.iter().zip(&v) {
        let negated = state.peer_pk.encrypt(-mine, Level::One, rng)?;
        let diff = state.peer_pk.add(ct_a, &negated)?;
        let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
        diffs.push(state.peer_pk.scalar_mul(&diff, sign)?);
    }
    diffs.shuffle(rng);
    courier.send(Phase::Phase2, messages::encode_ciphertexts(tags::BLINDED_DIFFS, &diffs))?;
    Ok(())
}
