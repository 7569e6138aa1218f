//! Communication accounting: who sent what, how big it was, and how many
//! rounds the conversation took.
//!
//! Each party records only its own sends. A send notes how many of the
//! peer's messages the sender had already consumed; merging the two logs
//! then reconstructs the dependency structure. A message's round is one
//! more than the latest round among the messages it consumed, so two
//! messages that depend only on older traffic share a round no matter how
//! the transports interleaved them — byte-for-byte identical accounting
//! over in-process queues and sockets.

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("consumed counts must not decrease (entry {index}: {current} after {previous})")]
    NonMonotonicConsume { index: usize, previous: u64, current: u64 },
    #[error("entry {index} consumes {consumed} peer messages but the peer sent only {sent}")]
    DanglingConsume { index: usize, consumed: u64, sent: u64 },
    #[error("malformed transcript line {0:?}")]
    Parse(String),
}

/// Protocol segment a message belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Setup,
    Phase1,
    Phase2,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Setup, Phase::Phase1, Phase::Phase2];

    fn code(self) -> u8 {
        match self {
            Phase::Setup => 0,
            Phase::Phase1 => 1,
            Phase::Phase2 => 2,
        }
    }

    fn from_code(c: u8) -> Option<Phase> {
        Phase::ALL.into_iter().find(|p| p.code() == c)
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Phase::Setup => write!(f, "setup"),
            Phase::Phase1 => write!(f, "phase1"),
            Phase::Phase2 => write!(f, "phase2"),
        }
    }
}

/// One send, as recorded by the sending party.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub phase: Phase,
    pub tag: u8,
    /// Wire bytes of the frame, header included.
    pub bytes: u64,
    /// Peer messages the sender had received before this send.
    pub consumed: u64,
}

/// Send log of a single party.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartyLog {
    entries: Vec<TranscriptEntry>,
}

impl PartyLog {
    pub fn new() -> Self {
        PartyLog::default()
    }

    pub fn log_send(&mut self, phase: Phase, tag: u8, bytes: u64, consumed: u64) {
        self.entries.push(TranscriptEntry { phase, tag, bytes, consumed });
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    /// Plain-text form, one `phase tag bytes consumed` line per entry; used
    /// to ship a log across a process boundary.
    pub fn to_wire(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "{} {} {} {}\n",
                e.phase.code(),
                e.tag,
                e.bytes,
                e.consumed
            ));
        }
        out
    }

    pub fn from_wire(text: &str) -> Result<PartyLog, MetricsError> {
        let mut log = PartyLog::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || MetricsError::Parse(line.to_string());
            let mut it = line.split_whitespace();
            let next = |it: &mut std::str::SplitWhitespace| -> Result<u64, MetricsError> {
                it.next().ok_or_else(bad)?.parse().map_err(|_| bad())
            };
            let phase = Phase::from_code(next(&mut it)? as u8).ok_or_else(bad)?;
            let tag = next(&mut it)?;
            if tag > u8::MAX as u64 {
                return Err(bad());
            }
            let bytes = next(&mut it)?;
            let consumed = next(&mut it)?;
            if it.next().is_some() {
                return Err(bad());
            }
            log.log_send(phase, tag as u8, bytes, consumed);
        }
        Ok(log)
    }
}

/// One send with its computed round, in the merged view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergedSend {
    /// `0` for the first party passed to [`Metrics::merge`], `1` for the second.
    pub party: u8,
    pub entry: TranscriptEntry,
    /// 1-based global round number.
    pub round: u64,
}

/// Merged two-party view with round numbers resolved.
#[derive(Debug, Clone)]
pub struct Metrics {
    sends: Vec<MergedSend>,
}

impl Metrics {
    /// Combine the two parties' logs. Fails if a log is internally
    /// inconsistent or references peer messages that were never sent.
    pub fn merge(a: &PartyLog, b: &PartyLog) -> Result<Metrics, MetricsError> {
        for log in [a, b] {
            for (i, w) in log.entries.windows(2).enumerate() {
                if w[1].consumed < w[0].consumed {
                    return Err(MetricsError::NonMonotonicConsume {
                        index: i + 1,
                        previous: w[0].consumed,
                        current: w[1].consumed,
                    });
                }
            }
        }
        let logs = [&a.entries, &b.entries];
        let mut rounds: [Vec<u64>; 2] = [Vec::new(), Vec::new()];
        loop {
            let mut progressed = false;
            for p in 0..2 {
                let (done, peer_done) = (rounds[p].len(), rounds[1 - p].len());
                if done < logs[p].len() {
                    let e = &logs[p][done];
                    if e.consumed as usize <= peer_done {
                        let dep_max = rounds[1 - p][..e.consumed as usize]
                            .iter()
                            .copied()
                            .max()
                            .unwrap_or(0);
                        rounds[p].push(dep_max + 1);
                        progressed = true;
                    }
                }
            }
            if !progressed {
                break;
            }
        }
        for p in 0..2 {
            if rounds[p].len() < logs[p].len() {
                let i = rounds[p].len();
                return Err(MetricsError::DanglingConsume {
                    index: i,
                    consumed: logs[p][i].consumed,
                    sent: rounds[1 - p].len() as u64,
                });
            }
        }
        let mut sends = Vec::new();
        for p in 0..2 {
            for (e, &round) in logs[p].iter().zip(&rounds[p]) {
                sends.push(MergedSend { party: p as u8, entry: *e, round });
            }
        }
        sends.sort_by_key(|s| (s.round, s.party));
        Ok(Metrics { sends })
    }

    pub fn sends(&self) -> &[MergedSend] {
        &self.sends
    }

    /// Number of distinct rounds in which this phase sent anything.
    pub fn rounds_in(&self, phase: Phase) -> u64 {
        let mut rounds: Vec<u64> = self
            .sends
            .iter()
            .filter(|s| s.entry.phase == phase)
            .map(|s| s.round)
            .collect();
        rounds.dedup();
        rounds.len() as u64
    }

    pub fn bytes_in(&self, phase: Phase) -> u64 {
        self.sends
            .iter()
            .filter(|s| s.entry.phase == phase)
            .map(|s| s.entry.bytes)
            .sum()
    }

    pub fn messages_in(&self, phase: Phase) -> u64 {
        self.sends.iter().filter(|s| s.entry.phase == phase).count() as u64
    }

    pub fn total_rounds(&self) -> u64 {
        self.sends.iter().map(|s| s.round).max().unwrap_or(0)
    }

    pub fn total_bytes(&self) -> u64 {
        self.sends.iter().map(|s| s.entry.bytes).sum()
    }

    /// Bytes summed per message tag.
    pub fn bytes_by_tag(&self) -> BTreeMap<u8, u64> {
        let mut out = BTreeMap::new();
        for s in &self.sends {
            *out.entry(s.entry.tag).or_insert(0) += s.entry.bytes;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The message flow of a full protocol run, written out by hand.
    fn full_run() -> (PartyLog, PartyLog) {
        let mut a = PartyLog::new();
        let mut b = PartyLog::new();
        // Key exchange: both fire immediately.
        a.log_send(Phase::Setup, 0x00, 100, 0);
        b.log_send(Phase::Setup, 0x00, 100, 0);
        // First phase: encrypted bits, blinded queries, decrypted answers.
        a.log_send(Phase::Phase1, 0x01, 5000, 1);
        b.log_send(Phase::Phase1, 0x01, 5000, 1);
        a.log_send(Phase::Phase1, 0x02, 800, 2);
        b.log_send(Phase::Phase1, 0x02, 800, 2);
        a.log_send(Phase::Phase1, 0x03, 300, 3);
        b.log_send(Phase::Phase1, 0x03, 300, 3);
        // Second phase: cardinality + vector from one side, cardinality +
        // blinded differences from the other.
        a.log_send(Phase::Phase2, 0x04, 14, 4);
        a.log_send(Phase::Phase2, 0x05, 2000, 4);
        b.log_send(Phase::Phase2, 0x04, 14, 4);
        b.log_send(Phase::Phase2, 0x06, 2000, 6);
        (a, b)
    }

    #[test]
    fn full_run_round_structure() {
        let (a, b) = full_run();
        let m = Metrics::merge(&a, &b).unwrap();
        assert_eq!(m.rounds_in(Phase::Setup), 1);
        assert_eq!(m.rounds_in(Phase::Phase1), 3);
        assert_eq!(m.rounds_in(Phase::Phase2), 2);
        assert_eq!(m.total_rounds(), 6);
        assert_eq!(m.messages_in(Phase::Phase1), 6);
        assert_eq!(m.bytes_in(Phase::Setup), 200);
        assert_eq!(m.bytes_in(Phase::Phase1), 12200);
        assert_eq!(m.bytes_in(Phase::Phase2), 4028);
        assert_eq!(m.total_bytes(), 200 + 12200 + 4028);
        assert_eq!(m.bytes_by_tag()[&0x01], 10000);
        assert_eq!(m.bytes_by_tag()[&0x04], 28);
    }

    #[test]
    fn independent_sends_share_a_round() {
        let mut a = PartyLog::new();
        let mut b = PartyLog::new();
        a.log_send(Phase::Phase1, 1, 10, 0);
        a.log_send(Phase::Phase1, 2, 10, 0);
        b.log_send(Phase::Phase1, 1, 10, 0);
        let m = Metrics::merge(&a, &b).unwrap();
        assert!(m.sends().iter().all(|s| s.round == 1));
        assert_eq!(m.rounds_in(Phase::Phase1), 1);
    }

    #[test]
    fn strict_alternation_counts_every_hop() {
        let mut a = PartyLog::new();
        let mut b = PartyLog::new();
        a.log_send(Phase::Phase1, 1, 10, 0); // round 1
        b.log_send(Phase::Phase1, 1, 10, 1); // round 2
        a.log_send(Phase::Phase1, 2, 10, 1); // round 3
        b.log_send(Phase::Phase1, 2, 10, 2); // round 4
        let m = Metrics::merge(&a, &b).unwrap();
        let rounds: Vec<u64> = m.sends().iter().map(|s| s.round).collect();
        assert_eq!(rounds, vec![1, 2, 3, 4]);
        assert_eq!(m.rounds_in(Phase::Phase1), 4);
    }

    #[test]
    fn inconsistent_logs_are_rejected() {
        let mut a = PartyLog::new();
        a.log_send(Phase::Phase1, 1, 10, 2);
        a.log_send(Phase::Phase1, 2, 10, 1);
        let err = Metrics::merge(&a, &PartyLog::new()).unwrap_err();
        assert_eq!(
            err,
            MetricsError::NonMonotonicConsume { index: 1, previous: 2, current: 1 }
        );

        let mut a = PartyLog::new();
        a.log_send(Phase::Phase1, 1, 10, 5);
        let err = Metrics::merge(&a, &PartyLog::new()).unwrap_err();
        assert_eq!(err, MetricsError::DanglingConsume { index: 0, consumed: 5, sent: 0 });
    }

    #[test]
    fn wire_roundtrip() {
        let (a, _) = full_run();
        let text = a.to_wire();
        assert_eq!(PartyLog::from_wire(&text).unwrap(), a);
        assert_eq!(PartyLog::from_wire("").unwrap(), PartyLog::new());
        assert!(PartyLog::from_wire("1 2 3").is_err());
        assert!(PartyLog::from_wire("9 2 3 4").is_err());
        assert!(PartyLog::from_wire("1 300 3 4").is_err());
        assert!(PartyLog::from_wire("1 2 x 4").is_err());
    }
}
