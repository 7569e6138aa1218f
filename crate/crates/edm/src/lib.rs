//! Approximate edit distance with moves between two strings, computed through
//! a semi-honest two-party protocol.
//!
//! The pipeline: each party parses its text into an edit-sensitive parsing
//! tree ([`esp`]), labels every node with a rolling hash ([`hash`]), then the
//! parties agree on consistent final labels without revealing their label
//! sets ([`protocol::phase1`], over the two-level homomorphic encryption in
//! [`he2`]) and compare characteristic vectors under those labels
//! ([`protocol::phase2`]). The L1 distance of the characteristic vectors
//! approximates the move-aware edit distance within the parsing's
//! approximation factor. [`oracles`] holds the brute-force references the
//! test suite checks everything against, and [`transport`]/[`metrics`]
//! carry frames between the parties and account for every byte and round.

pub mod esp;
pub mod hash;
pub mod he2;
pub mod metrics;
pub mod oracles;
pub mod protocol;
pub mod text;
pub mod transport;

pub use esp::{CharacteristicVector, EspError, EspNode, EspTree};
pub use hash::{HashConfig, HashError, HashValue};
pub use he2::{BackendKind, Ciphertext, He2Error, KeyPair, Level, PublicKey, SecretKey};
pub use metrics::{Metrics, Phase, TranscriptEntry};
pub use oracles::{approximation_report, exact_edm, levenshtein, reference_labeling, EdmResult};
pub use protocol::{
    run_edm, run_phase1, run_phase1_with_sets, EdmOutcome, Phase1Outcome, Phase1Result,
    ProtocolConfig, ProtocolError, Role,
};
pub use text::Text;
pub use transport::{Channel, Frame, TransportError};
