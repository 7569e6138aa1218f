//! The two-party protocol: consistent labeling, then vector comparison.
//!
//! Party A and party B each hold a private text. After a key exchange
//! (each party generates its own two-level key pair), the protocol runs in
//! two phases:
//!
//! * **Phase 1 — consistent labeling, 3 rounds.** Each party encodes its
//!   tentative label set as an encrypted bit vector over the hash range
//!   and sends it across. Each side then forms the encrypted union under
//!   the *peer's* key, takes running prefix sums, and snapshots the sum at
//!   its own labels — the snapshot at label v is exactly v's rank in the
//!   sorted union. A final snapshot at the top of the range (the "probe")
//!   carries the union cardinality. The snapshots go back to their key
//!   holder blinded by large one-time offsets, return decrypted, and the
//!   blinds come off. Both parties end with the rank of every label they
//!   own, and neither sees the peer's labels or ranks in the clear.
//!
//! * **Phase 2 — distance, 2 rounds.** Both parties announce the union
//!   cardinality (a consistency check; each learned it from its own
//!   probe). A sends its characteristic vector encrypted under its own
//!   key; B subtracts its vector homomorphically, flips each difference by
//!   a random sign, shuffles, and returns. A decrypts and sums absolute
//!   values: the L1 distance, revealed to A alone. The signs and the
//!   shuffle deny A everything else.
//!
//! Every send records how many peer messages the sender had consumed, so
//! the merged logs reconstruct the round structure (see [`crate::metrics`]).

use crate::esp::EspTree;
use crate::hash::HashConfig;
use crate::he2::{BackendKind, He2Error};
use crate::metrics::{Metrics, MetricsError, PartyLog, Phase};
use crate::text::Text;
use crate::transport::{self, Channel, Frame, TransportError};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::collections::BTreeMap;
use thiserror::Error;

mod messages;
mod phase1;
mod phase2;

pub use messages::tags;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Esp(#[from] crate::esp::EspError),
    #[error(transparent)]
    He2(#[from] He2Error),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("peer violated the protocol: {0}")]
    Peer(String),
    #[error("party thread failed: {0}")]
    Thread(String),
}

/// Which chair this party occupies. Phase 1 is symmetric; in phase 2 party
/// A supplies the encrypted vector and learns the distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    A,
    B,
}

impl Role {
    fn rng_stream(self) -> u64 {
        match self {
            Role::A => 1,
            Role::B => 2,
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Role::A => write!(f, "A"),
            Role::B => write!(f, "B"),
        }
    }
}

/// Joint parameters both parties must agree on out of band.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub backend: BackendKind,
    /// Group size for the crypto backend; ignored by the clear backend.
    pub security_bits: u32,
    pub hash: HashConfig,
    /// Blinding slack in bits: each blind is uniform over
    /// `[0, n_cap * 2^sigma)`.
    pub sigma: u32,
    /// Cap on the union cardinality the run is sized for; defaults to the
    /// hash range (the union can never exceed it).
    pub n_cap: Option<u64>,
    /// Plaintext window radius; defaults to `2^62` for the clear backend
    /// and to `n_cap + blind range` for the crypto backend.
    pub bound: Option<i64>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            backend: BackendKind::Clear,
            security_bits: 256,
            hash: HashConfig::default(),
            sigma: 30,
            n_cap: None,
            bound: None,
        }
    }
}

impl ProtocolConfig {
    pub fn effective_n_cap(&self) -> u64 {
        self.n_cap.unwrap_or(self.hash.m)
    }

    /// Width of the blinding interval, `n_cap * 2^sigma`.
    pub fn blind_range(&self) -> Result<u64, ProtocolError> {
        let n_cap = self.effective_n_cap();
        1u64.checked_shl(self.sigma)
            .and_then(|s| n_cap.checked_mul(s))
            .ok_or_else(|| {
                ProtocolError::Config(format!(
                    "blind range {n_cap} * 2^{} overflows",
                    self.sigma
                ))
            })
    }

    pub fn effective_bound(&self) -> Result<i64, ProtocolError> {
        if let Some(b) = self.bound {
            return Ok(b);
        }
        match self.backend {
            BackendKind::Clear => Ok(1 << 62),
            BackendKind::Crypto => {
                let r = self.blind_range()?;
                let n_cap = self.effective_n_cap();
                i64::try_from(n_cap + r).map_err(|_| {
                    ProtocolError::Config("default plaintext window overflows".into())
                })
            }
        }
    }

    /// Check the parameters fit together: the hash range must index a
    /// 32-bit bit vector, and blinded prefix sums must stay inside the
    /// plaintext window.
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.hash.m > u32::MAX as u64 {
            return Err(ProtocolError::Config(format!(
                "hash range {} exceeds the bit-vector limit {}",
                self.hash.m,
                u32::MAX
            )));
        }
        if self.sigma >= 63 {
            return Err(ProtocolError::Config(format!(
                "blinding slack 2^{} is out of range",
                self.sigma
            )));
        }
        let n_cap = self.effective_n_cap();
        if n_cap == 0 || n_cap > self.hash.m {
            return Err(ProtocolError::Config(format!(
                "union cap {n_cap} must be in 1..={}",
                self.hash.m
            )));
        }
        let r = self.blind_range()?;
        let bound = self.effective_bound()?;
        let needed = n_cap.checked_add(r).filter(|&v| v <= bound as u64);
        if bound < 1 || needed.is_none() {
            return Err(ProtocolError::Config(format!(
                "plaintext window {bound} cannot hold blinded sums up to {n_cap} + {r}"
            )));
        }
        Ok(())
    }
}

/// What one party walks away from phase 1 with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phase1Result {
    /// Rank in the sorted union, for each label this party holds.
    pub ranks: BTreeMap<u64, u64>,
    /// Union cardinality, learned through the probe; absent when this
    /// party had no labels and therefore sent no probe.
    pub union_size: Option<u64>,
}

/// Both parties' phase-1 results plus the merged communication metrics.
#[derive(Debug, Clone)]
pub struct Phase1Outcome {
    pub a: Phase1Result,
    pub b: Phase1Result,
    pub metrics: Metrics,
}

/// One party's view after a full run.
#[derive(Debug, Clone)]
pub struct EdmPartyResult {
    pub role: Role,
    /// Approximate distance; only party A learns it.
    pub l1: Option<u64>,
    /// Union cardinality (the length of the shared vector space).
    pub n: u64,
    pub ranks: BTreeMap<u64, u64>,
}

/// Result of a full two-party run plus merged metrics.
#[derive(Debug, Clone)]
pub struct EdmOutcome {
    /// Approximate distance, as learned by party A.
    pub l1: u64,
    /// Union cardinality.
    pub n: u64,
    pub metrics: Metrics,
}

/// A channel wrapper that logs every send with its consumed-count and
/// counts receives, so round structure can be reconstructed afterwards.
pub(crate) struct Courier<'a> {
    channel: &'a mut dyn Channel,
    log: PartyLog,
    received: u64,
}

impl<'a> Courier<'a> {
    fn new(channel: &'a mut dyn Channel) -> Self {
        Courier { channel, log: PartyLog::new(), received: 0 }
    }

    pub(crate) fn send(&mut self, phase: Phase, frame: Frame) -> Result<(), ProtocolError> {
        self.log.log_send(phase, frame.tag, frame.wire_len(), self.received);
        self.channel.send(frame)?;
        Ok(())
    }

    /// Receive a frame, insisting on the given tag.
    pub(crate) fn expect(&mut self, tag: u8) -> Result<Frame, ProtocolError> {
        let frame = self.channel.recv()?;
        self.received += 1;
        if frame.tag != tag {
            return Err(ProtocolError::Peer(format!(
                "expected message {tag:#04x}, got {:#04x}",
                frame.tag
            )));
        }
        Ok(frame)
    }

    fn into_log(self) -> PartyLog {
        self.log
    }
}

/// When one party fails, the other usually sees only the resulting closed
/// channel; pick the substantive error over the cascade.
fn unwrap_parties<T, U>(
    a: Result<T, ProtocolError>,
    b: Result<U, ProtocolError>,
) -> Result<(T, U), ProtocolError> {
    match (a, b) {
        (Ok(a), Ok(b)) => Ok((a, b)),
        (Err(e), Ok(_)) => Err(e),
        (Ok(_), Err(e)) => Err(e),
        (Err(ea), Err(eb)) => {
            if matches!(ea, ProtocolError::Transport(_))
                && !matches!(eb, ProtocolError::Transport(_))
            {
                Err(eb)
            } else {
                Err(ea)
            }
        }
    }
}

fn party_rng(seed: u64, role: Role) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(role.rng_stream());
    rng
}

/// Run one party of phase 1 over an arbitrary label set (sorted ascending
/// internally; duplicates rejected). Used directly by the process-per-party
/// transport, and by the in-process drivers below.
pub fn run_phase1_party(
    role: Role,
    labels: &[u64],
    cfg: &ProtocolConfig,
    seed: u64,
    channel: &mut dyn Channel,
) -> Result<(Phase1Result, PartyLog), ProtocolError> {
    let mut rng = party_rng(seed, role);
    let mut courier = Courier::new(channel);
    let state = phase1::run(labels, cfg, &mut rng, &mut courier)?;
    Ok((state.into_result(), courier.into_log()))
}

/// Run one party of the full protocol on its private text.
pub fn run_edm_party(
    role: Role,
    text: &Text,
    cfg: &ProtocolConfig,
    seed: u64,
    channel: &mut dyn Channel,
) -> Result<(EdmPartyResult, PartyLog), ProtocolError> {
    let tree = EspTree::build(text, cfg.hash)?;
    let labels = tree.tentative_label_set();
    let counts = tree.characteristic_vector();
    let mut rng = party_rng(seed, role);
    let mut courier = Courier::new(channel);
    let state = phase1::run(&labels, cfg, &mut rng, &mut courier)?;
    let n = state.union_size.ok_or_else(|| {
        ProtocolError::Peer("phase 1 ended without a union cardinality".into())
    })?;
    let ranks = state.ranks.clone();
    let l1 = match role {
        Role::A => Some(phase2::run_a(&state, &counts, &mut rng, &mut courier)?),
        Role::B => {
            phase2::run_b(&state, &counts, &mut rng, &mut courier)?;
            None
        }
    };
    Ok((EdmPartyResult { role, l1, n, ranks }, courier.into_log()))
}

/// Drive both parties of phase 1 in-process over explicit label sets.
pub fn run_phase1_with_sets(
    a_labels: &[u64],
    b_labels: &[u64],
    cfg: &ProtocolConfig,
    seed: u64,
) -> Result<Phase1Outcome, ProtocolError> {
    let (mut ch_a, mut ch_b) = transport::pair();
    let cfg_b = cfg.clone();
    let b_labels = b_labels.to_vec();
    let handle = std::thread::spawn(move || {
        run_phase1_party(Role::B, &b_labels, &cfg_b, seed, &mut ch_b)
    });
    let result_a = run_phase1_party(Role::A, a_labels, cfg, seed, &mut ch_a);
    // Close A's endpoint before joining: if A bailed early, B must see a
    // closed channel rather than wait forever.
    drop(ch_a);
    let result_b = handle
        .join()
        .map_err(|_| ProtocolError::Thread("party B panicked".into()))?;
    let ((a, log_a), (b, log_b)) = unwrap_parties(result_a, result_b)?;
    let metrics = Metrics::merge(&log_a, &log_b)?;
    Ok(Phase1Outcome { a, b, metrics })
}

/// Drive both parties of phase 1 in-process on two texts, labeling their
/// parse trees.
pub fn run_phase1(
    x: &Text,
    y: &Text,
    cfg: &ProtocolConfig,
    seed: u64,
) -> Result<Phase1Outcome, ProtocolError> {
    let a = EspTree::build(x, cfg.hash)?.tentative_label_set();
    let b = EspTree::build(y, cfg.hash)?.tentative_label_set();
    run_phase1_with_sets(&a, &b, cfg, seed)
}

/// Drive the full protocol in-process: party A holds `x`, party B holds
/// `y`, and the returned distance is what A learned.
pub fn run_edm(
    x: &Text,
    y: &Text,
    cfg: &ProtocolConfig,
    seed: u64,
) -> Result<EdmOutcome, ProtocolError> {
    let (mut ch_a, mut ch_b) = transport::pair();
    let cfg_b = cfg.clone();
    let y = y.clone();
    let handle = std::thread::spawn(move || {
        run_edm_party(Role::B, &y, &cfg_b, seed, &mut ch_b)
    });
    let result_a = run_edm_party(Role::A, x, cfg, seed, &mut ch_a);
    drop(ch_a);
    let result_b = handle
        .join()
        .map_err(|_| ProtocolError::Thread("party B panicked".into()))?;
    let ((a, log_a), (b, log_b)) = unwrap_parties(result_a, result_b)?;
    debug_assert_eq!(a.n, b.n);
    let metrics = Metrics::merge(&log_a, &log_b)?;
    Ok(EdmOutcome {
        l1: a.l1.expect("party A learns the distance"),
        n: a.n,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::esp::l1_distance;
    use crate::oracles::reference_labeling;
    use rand::{Rng, SeedableRng};

    fn cfg_with_m(m: u64) -> ProtocolConfig {
        ProtocolConfig { hash: HashConfig::new(256, m).unwrap(), ..ProtocolConfig::default() }
    }

    #[test]
    fn phase1_agrees_with_the_reference_labeling() {
        let a = [5u64, 17, 99];
        let b = [17u64, 202];
        let out = run_phase1_with_sets(&a, &b, &ProtocolConfig::default(), 7).unwrap();
        let reference = reference_labeling(&a, &b);
        assert_eq!(out.a.ranks.len(), 3);
        assert_eq!(out.b.ranks.len(), 2);
        for (&label, &rank) in out.a.ranks.iter().chain(out.b.ranks.iter()) {
            assert_eq!(rank, reference[&label]);
        }
        assert_eq!(out.a.union_size, Some(4));
        assert_eq!(out.b.union_size, Some(4));
        assert_eq!(out.a.ranks[&5], 1);
        assert_eq!(out.a.ranks[&17], 2);
        assert_eq!(out.b.ranks[&202], 4);
    }

    #[test]
    fn phase1_random_sets_match_the_reference() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(70);
        for trial in 0..10 {
            let m = [32u64, 64, 1031][trial % 3];
            let cfg = cfg_with_m(m);
            let draw = |rng: &mut rand_chacha::ChaCha20Rng| {
                let k = rng.gen_range(0..10);
                let mut v: Vec<u64> = (0..k).map(|_| rng.gen_range(0..m)).collect();
                v.sort_unstable();
                v.dedup();
                v
            };
            let a = draw(&mut rng);
            let b = draw(&mut rng);
            let out = run_phase1_with_sets(&a, &b, &cfg, 100 + trial as u64).unwrap();
            let reference = reference_labeling(&a, &b);
            assert_eq!(out.a.ranks.len(), a.len());
            assert_eq!(out.b.ranks.len(), b.len());
            for (&label, &rank) in out.a.ranks.iter().chain(out.b.ranks.iter()) {
                assert_eq!(rank, reference[&label], "label {label} trial {trial}");
            }
            for (result, own) in [(&out.a, &a), (&out.b, &b)] {
                assert_eq!(
                    result.union_size,
                    (!own.is_empty()).then_some(reference.len() as u64)
                );
            }
        }
    }

    #[test]
    fn phase1_empty_sides() {
        let out =
            run_phase1_with_sets(&[], &[4, 9], &ProtocolConfig::default(), 11).unwrap();
        assert!(out.a.ranks.is_empty());
        assert_eq!(out.a.union_size, None);
        assert_eq!(out.b.ranks[&4], 1);
        assert_eq!(out.b.ranks[&9], 2);
        assert_eq!(out.b.union_size, Some(2));

        let out = run_phase1_with_sets(&[], &[], &ProtocolConfig::default(), 11).unwrap();
        assert!(out.a.ranks.is_empty() && out.b.ranks.is_empty());
        assert_eq!(out.a.union_size, None);
        assert_eq!(out.b.union_size, None);
    }

    #[test]
    fn phase1_runs_in_three_rounds() {
        let out =
            run_phase1_with_sets(&[1, 2], &[2, 3], &ProtocolConfig::default(), 13).unwrap();
        let m = &out.metrics;
        assert_eq!(m.rounds_in(Phase::Setup), 1);
        assert_eq!(m.rounds_in(Phase::Phase1), 3);
        assert_eq!(m.messages_in(Phase::Setup), 2);
        assert_eq!(m.messages_in(Phase::Phase1), 6);
        // Tag per round: bits, then blinded queries, then answers.
        let mut phase1 = m.sends().iter().filter(|s| s.entry.phase == Phase::Phase1);
        let tags_seen: Vec<u8> = phase1.by_ref().map(|s| s.entry.tag).collect();
        assert_eq!(tags_seen, vec![0x01, 0x01, 0x02, 0x02, 0x03, 0x03]);
    }

    #[test]
    fn union_cap_is_enforced() {
        let cfg = ProtocolConfig { n_cap: Some(4), ..ProtocolConfig::default() };
        let err =
            run_phase1_with_sets(&[0, 1, 2], &[3, 4, 5], &cfg, 17).unwrap_err();
        assert!(matches!(err, ProtocolError::Peer(_)), "{err}");
    }

    #[test]
    fn labels_outside_the_hash_range_are_rejected() {
        let cfg = cfg_with_m(64);
        let err = run_phase1_with_sets(&[70], &[1], &cfg, 19).unwrap_err();
        assert!(matches!(err, ProtocolError::Config(_)), "{err}");
    }

    #[test]
    fn config_validation_catches_bad_shapes() {
        let bad_sigma = ProtocolConfig { sigma: 63, ..ProtocolConfig::default() };
        assert!(matches!(bad_sigma.validate(), Err(ProtocolError::Config(_))));
        let bad_cap = ProtocolConfig { n_cap: Some(0), ..ProtocolConfig::default() };
        assert!(matches!(bad_cap.validate(), Err(ProtocolError::Config(_))));
        let bad_cap = ProtocolConfig { n_cap: Some(2000), ..ProtocolConfig::default() };
        assert!(matches!(bad_cap.validate(), Err(ProtocolError::Config(_))));
        let tight_bound = ProtocolConfig { bound: Some(100), ..ProtocolConfig::default() };
        assert!(matches!(tight_bound.validate(), Err(ProtocolError::Config(_))));
        assert!(ProtocolConfig::default().validate().is_ok());
    }

    #[test]
    fn stray_messages_are_rejected() {
        let (mut ch_a, mut ch_b) = transport::pair();
        let rogue = std::thread::spawn(move || {
            ch_b.send(Frame::new(0x42, vec![1, 2, 3])).unwrap();
            // Keep the channel alive long enough for A to read the frame.
            ch_b
        });
        let err = run_phase1_party(Role::A, &[1], &ProtocolConfig::default(), 23, &mut ch_a)
            .unwrap_err();
        assert!(matches!(err, ProtocolError::Peer(_)), "{err}");
        drop(rogue.join().unwrap());
    }

    #[test]
    fn edm_matches_the_local_vector_distance() {
        // The protocol's answer must equal the L1 distance of the two
        // characteristic vectors computed without any protocol at all;
        // consistent relabeling is a rank permutation and preserves L1.
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(71);
        for trial in 0..8 {
            let m = [64u64, 1031][trial % 2];
            let cfg = cfg_with_m(m);
            let len_x = rng.gen_range(1..40);
            let len_y = rng.gen_range(1..40);
            let x = Text::new((0..len_x).map(|_| rng.gen_range(97..100u64)).collect());
            let y = Text::new((0..len_y).map(|_| rng.gen_range(97..100u64)).collect());
            let out = run_edm(&x, &y, &cfg, 200 + trial as u64).unwrap();
            let vx = EspTree::build(&x, cfg.hash).unwrap().characteristic_vector();
            let vy = EspTree::build(&y, cfg.hash).unwrap().characteristic_vector();
            assert_eq!(out.l1, l1_distance(&vx, &vy), "trial {trial}");
            let union: std::collections::BTreeSet<u64> =
                vx.counts.keys().chain(vy.counts.keys()).copied().collect();
            assert_eq!(out.n, union.len() as u64, "trial {trial}");
        }
    }

    #[test]
    fn edm_on_the_swap_pair() {
        let out = run_edm(
            &Text::from("ab"),
            &Text::from("ba"),
            &ProtocolConfig::default(),
            29,
        )
        .unwrap();
        assert_eq!(out.l1, 2);
        assert_eq!(out.n, 4);
    }

    #[test]
    fn edm_identical_texts_have_distance_zero() {
        let x = Text::from("abracadabra");
        let out = run_edm(&x, &x, &ProtocolConfig::default(), 31).unwrap();
        assert_eq!(out.l1, 0);
    }

    #[test]
    fn full_run_round_structure() {
        let out = run_edm(
            &Text::from("abracadabra"),
            &Text::from("abracadabra overflow"),
            &ProtocolConfig::default(),
            37,
        )
        .unwrap();
        let m = &out.metrics;
        assert_eq!(m.rounds_in(Phase::Setup), 1);
        assert_eq!(m.rounds_in(Phase::Phase1), 3);
        assert_eq!(m.rounds_in(Phase::Phase2), 2);
        assert_eq!(m.total_rounds(), 6);
        assert_eq!(m.messages_in(Phase::Phase2), 4);
        assert!(m.bytes_in(Phase::Phase1) > 0);
        assert!(m.bytes_in(Phase::Phase2) > 0);
    }

    #[test]
    fn repeated_runs_are_deterministic() {
        let x = Text::from("deterministic");
        let y = Text::from("transcripts");
        let first = run_edm(&x, &y, &ProtocolConfig::default(), 41).unwrap();
        let second = run_edm(&x, &y, &ProtocolConfig::default(), 41).unwrap();
        assert_eq!(first.l1, second.l1);
        assert_eq!(first.metrics.sends(), second.metrics.sends());
        // A different seed changes the blinds but never the answer.
        let third = run_edm(&x, &y, &ProtocolConfig::default(), 42).unwrap();
        assert_eq!(first.l1, third.l1);
    }

    #[test]
    fn socket_transport_reproduces_the_inproc_transcript() {
        use crate::transport::SocketChannel;
        use std::net::{TcpListener, TcpStream};

        let x = Text::from("over the wire");
        let y = Text::from("over the write");
        let cfg = ProtocolConfig::default();
        let inproc = run_edm(&x, &y, &cfg, 43).unwrap();

        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let cfg_b = cfg.clone();
        let y2 = y.clone();
        let party_b = std::thread::spawn(move || {
            let mut ch = SocketChannel::new(TcpStream::connect(addr).unwrap()).unwrap();
            run_edm_party(Role::B, &y2, &cfg_b, 43, &mut ch)
        });
        let (stream, _) = listener.accept().unwrap();
        let mut ch = SocketChannel::new(stream).unwrap();
        let (a, log_a) = run_edm_party(Role::A, &x, &cfg, 43, &mut ch).unwrap();
        let (_b, log_b) = party_b.join().unwrap().unwrap();

        let metrics = Metrics::merge(&log_a, &log_b).unwrap();
        assert_eq!(a.l1, Some(inproc.l1));
        assert_eq!(metrics.sends(), inproc.metrics.sends());
    }

    #[test]
    fn crypto_backend_matches_clear_results() {
        let x = Text::from("abacbbcaabca");
        let y = Text::from("bacabbcaacba");
        let base = ProtocolConfig {
            hash: HashConfig::new(256, 48).unwrap(),
            sigma: 8,
            ..ProtocolConfig::default()
        };
        let crypto_cfg =
            ProtocolConfig { backend: BackendKind::Crypto, ..base.clone() };
        let clear = run_edm(&x, &y, &base, 77).unwrap();
        let crypto = run_edm(&x, &y, &crypto_cfg, 77).unwrap();
        assert_eq!(crypto.l1, clear.l1);
        assert_eq!(crypto.n, clear.n);
        assert_eq!(
            crypto.metrics.total_rounds(),
            clear.metrics.total_rounds(),
            "round structure must not depend on the backend"
        );
        let vx = EspTree::build(&x, base.hash).unwrap().characteristic_vector();
        let vy = EspTree::build(&y, base.hash).unwrap().characteristic_vector();
        assert_eq!(crypto.l1, l1_distance(&vx, &vy));
    }
}
