//! Two-level additively homomorphic encryption.
//!
//! Ciphertexts carry signed integers and support unlimited additions and
//! scalar multiplications at either level, plus *one* multiplication, which
//! takes two level-1 ciphertexts to a level-2 ciphertext. Level and key
//! discipline live here in the envelope, backend-independently: every
//! operation checks that its operands are under the expected key and at a
//! legal level, so protocol code cannot silently mix spaces.
//!
//! Two backends share the envelope. `Clear` carries plaintexts verbatim —
//! same API, same message flow, same level rules, zero cryptography — and
//! exists so the protocol can be tested and benchmarked independently of
//! the pairing arithmetic. `Crypto` is a pairing-based scheme on a curve of
//! composite group order n = q1*q2, where encryption blinds with a
//! subgroup element of order q1 and decryption projects it away and takes
//! a discrete log over the small message window.
//!
//! Decryption only searches messages in `[-bound, bound]`; values pushed
//! beyond the bound by homomorphic arithmetic are unrecoverable, and the
//! clear backend enforces the same window so range bugs surface without
//! the crypto backend in the loop.

use rand::RngCore;
use thiserror::Error;

mod bgn;

/// Ciphertext level: fresh encryptions and additive work at level one, the
/// output of the single multiplication at level two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    One,
    Two,
}

impl Level {
    pub fn as_u8(self) -> u8 {
        match self {
            Level::One => 1,
            Level::Two => 2,
        }
    }

    pub fn from_u8(v: u8) -> Option<Level> {
        match v {
            1 => Some(Level::One),
            2 => Some(Level::Two),
            _ => None,
        }
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// Which arithmetic sits behind the envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    /// Plaintext carrier: identical interface and flow, no secrecy.
    Clear,
    /// Pairing-based scheme over a composite-order curve group.
    Crypto,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum He2Error {
    #[error("operands are at levels {left} and {right}, which this operation forbids")]
    LevelMismatch { left: Level, right: Level },
    #[error("operation requires a level-1 ciphertext, got level {got}")]
    NotLevelOne { got: Level },
    #[error("ciphertext under key {got} used with key {expected}")]
    KeyMismatch { expected: u32, got: u32 },
    #[error("message {value} outside the plaintext window ±{bound}")]
    MessageOutOfRange { value: i64, bound: i64 },
    #[error("decrypted value fell outside the plaintext window ±{bound}")]
    DecryptOutOfRange { bound: i64 },
    #[error("security level {bits} bits unsupported (available: {supported:?})")]
    UnsupportedSecurity { bits: u32, supported: &'static [u32] },
    #[error("plaintext window bound {0} out of range for this backend")]
    InvalidBound(i64),
    #[error("homomorphic arithmetic overflowed the carrier type")]
    Overflow,
    #[error("malformed encoding: {0}")]
    Decode(&'static str),
}

/// Security levels the crypto backend accepts.
pub const SUPPORTED_SECURITY_BITS: &[u32] = &[256];

#[derive(Debug, Clone, PartialEq, Eq)]
enum PkInner {
    Clear,
    Crypto(bgn::PublicKey),
}

#[derive(Debug, Clone)]
enum SkInner {
    Clear,
    Crypto(bgn::SecretKey),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    key_id: u32,
    bound: i64,
    inner: PkInner,
}

#[derive(Debug, Clone)]
pub struct SecretKey {
    key_id: u32,
    bound: i64,
    inner: SkInner,
}

#[derive(Debug, Clone)]
pub struct KeyPair {
    pub public: PublicKey,
    pub secret: SecretKey,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Payload {
    Clear(i64),
    CryptoOne(bgn::CiphertextOne),
    CryptoTwo(bgn::CiphertextTwo),
}

/// An encrypted signed integer, tagged with its level and originating key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    level: Level,
    key_id: u32,
    payload: Payload,
}

impl Ciphertext {
    pub fn level(&self) -> Level {
        self.level
    }

    pub fn key_id(&self) -> u32 {
        self.key_id
    }

    /// Wire form: level byte, key id, payload length, payload.
    pub fn to_bytes(&self) -> Vec<u8> {
        let payload = match &self.payload {
            Payload::Clear(v) => v.to_le_bytes().to_vec(),
            Payload::CryptoOne(c) => c.to_bytes(),
            Payload::CryptoTwo(c) => c.to_bytes(),
        };
        let mut out = Vec::with_capacity(9 + payload.len());
        out.push(self.level.as_u8());
        out.extend_from_slice(&self.key_id.to_le_bytes());
        out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&payload);
        out
    }
}

/// Generate a key pair. `bound` fixes the plaintext window `[-bound, bound]`
/// that decryption will search; `security_bits` sizes the crypto backend's
/// groups and is ignored by the clear backend. The key id is drawn from the
/// caller's seeded generator, so runs are reproducible end to end.
pub fn keygen(
    kind: BackendKind,
    security_bits: u32,
    bound: i64,
    rng: &mut (impl RngCore + ?Sized),
) -> Result<KeyPair, He2Error> {
    if bound < 1 || bound > (1 << 62) {
        return Err(He2Error::InvalidBound(bound));
    }
    let key_id = rng.next_u32();
    match kind {
        BackendKind::Clear => Ok(KeyPair {
            public: PublicKey { key_id, bound, inner: PkInner::Clear },
            secret: SecretKey { key_id, bound, inner: SkInner::Clear },
        }),
        BackendKind::Crypto => {
            if !SUPPORTED_SECURITY_BITS.contains(&security_bits) {
                return Err(He2Error::UnsupportedSecurity {
                    bits: security_bits,
                    supported: SUPPORTED_SECURITY_BITS,
                });
            }
            if bound > bgn::MAX_BOUND {
                return Err(He2Error::InvalidBound(bound));
            }
            let (pk, sk) = bgn::keygen(security_bits, rng);
            Ok(KeyPair {
                public: PublicKey { key_id, bound, inner: PkInner::Crypto(pk) },
                secret: SecretKey { key_id, bound, inner: SkInner::Crypto(sk) },
            })
        }
    }
}

impl PublicKey {
    pub fn key_id(&self) -> u32 {
        self.key_id
    }

    /// Plaintext window radius.
    pub fn bound(&self) -> i64 {
        self.bound
    }

    pub fn kind(&self) -> BackendKind {
        match self.inner {
            PkInner::Clear => BackendKind::Clear,
            PkInner::Crypto(_) => BackendKind::Crypto,
        }
    }

    fn check_key(&self, c: &Ciphertext) -> Result<(), He2Error> {
        if c.key_id != self.key_id {
            return Err(He2Error::KeyMismatch { expected: self.key_id, got: c.key_id });
        }
        Ok(())
    }

    pub fn encrypt(
        &self,
        value: i64,
        level: Level,
        rng: &mut (impl RngCore + ?Sized),
    ) -> Result<Ciphertext, He2Error> {
        if value.abs() > self.bound {
            return Err(He2Error::MessageOutOfRange { value, bound: self.bound });
        }
        let payload = match &self.inner {
            PkInner::Clear => Payload::Clear(value),
            PkInner::Crypto(pk) => match level {
                Level::One => Payload::CryptoOne(pk.encrypt_one(value, rng)),
                Level::Two => Payload::CryptoTwo(pk.encrypt_two(value, rng)),
            },
        };
        Ok(Ciphertext { level, key_id: self.key_id, payload })
    }

    /// Homomorphic addition of two ciphertexts at the same level.
    pub fn add(&self, x: &Ciphertext, y: &Ciphertext) -> Result<Ciphertext, He2Error> {
        self.check_key(x)?;
        self.check_key(y)?;
        if x.level != y.level {
            return Err(He2Error::LevelMismatch { left: x.level, right: y.level });
        }
        let payload = match (&x.payload, &y.payload, &self.inner) {
            (Payload::Clear(a), Payload::Clear(b), PkInner::Clear) => {
                Payload::Clear(a.checked_add(*b).ok_or(He2Error::Overflow)?)
            }
            (Payload::CryptoOne(a), Payload::CryptoOne(b), PkInner::Crypto(pk)) => {
                Payload::CryptoOne(pk.add_one(a, b))
            }
            (Payload::CryptoTwo(a), Payload::CryptoTwo(b), PkInner::Crypto(pk)) => {
                Payload::CryptoTwo(pk.add_two(a, b))
            }
            _ => return Err(He2Error::Decode("payload does not match the key's backend")),
        };
        Ok(Ciphertext { level: x.level, key_id: self.key_id, payload })
    }

    /// Homomorphic multiplication by a plaintext scalar.
    pub fn scalar_mul(&self, x: &Ciphertext, k: i64) -> Result<Ciphertext, He2Error> {
        self.check_key(x)?;
        let payload = match (&x.payload, &self.inner) {
            (Payload::Clear(a), PkInner::Clear) => {
                Payload::Clear(a.checked_mul(k).ok_or(He2Error::Overflow)?)
            }
            (Payload::CryptoOne(a), PkInner::Crypto(pk)) => {
                Payload::CryptoOne(pk.scalar_mul_one(a, k))
            }
            (Payload::CryptoTwo(a), PkInner::Crypto(pk)) => {
                Payload::CryptoTwo(pk.scalar_mul_two(a, k))
            }
            _ => return Err(He2Error::Decode("payload does not match the key's backend")),
        };
        Ok(Ciphertext { level: x.level, key_id: self.key_id, payload })
    }

    pub fn negate(&self, x: &Ciphertext) -> Result<Ciphertext, He2Error> {
        self.scalar_mul(x, -1)
    }

    /// The one multiplication: two level-1 ciphertexts to a level-2
    /// ciphertext of the product.
    pub fn multiply(&self, x: &Ciphertext, y: &Ciphertext) -> Result<Ciphertext, He2Error> {
        self.check_key(x)?;
        self.check_key(y)?;
        for c in [x, y] {
            if c.level != Level::One {
                return Err(He2Error::NotLevelOne { got: c.level });
            }
        }
        let payload = match (&x.payload, &y.payload, &self.inner) {
            (Payload::Clear(a), Payload::Clear(b), PkInner::Clear) => {
                Payload::Clear(a.checked_mul(*b).ok_or(He2Error::Overflow)?)
            }
            (Payload::CryptoOne(a), Payload::CryptoOne(b), PkInner::Crypto(pk)) => {
                Payload::CryptoTwo(pk.multiply(a, b))
            }
            _ => return Err(He2Error::Decode("payload does not match the key's backend")),
        };
        Ok(Ciphertext { level: Level::Two, key_id: self.key_id, payload })
    }

    /// Lift a level-1 ciphertext to level 2 without changing its value, so
    /// it can be combined with multiplication outputs.
    pub fn promote(&self, x: &Ciphertext) -> Result<Ciphertext, He2Error> {
        self.check_key(x)?;
        if x.level != Level::One {
            return Err(He2Error::NotLevelOne { got: x.level });
        }
        let payload = match (&x.payload, &self.inner) {
            (Payload::Clear(a), PkInner::Clear) => Payload::Clear(*a),
            (Payload::CryptoOne(a), PkInner::Crypto(pk)) => {
                Payload::CryptoTwo(pk.promote(a))
            }
            _ => return Err(He2Error::Decode("payload does not match the key's backend")),
        };
        Ok(Ciphertext { level: Level::Two, key_id: self.key_id, payload })
    }

    /// OR of two encrypted bits: x + y - x*y, at level 2. Callers must
    /// ensure both ciphertexts hold 0 or 1.
    pub fn encrypted_or(&self, x: &Ciphertext, y: &Ciphertext) -> Result<Ciphertext, He2Error> {
        let sum = self.promote(&self.add(x, y)?)?;
        let product = self.multiply(x, y)?;
        self.add(&sum, &self.negate(&product)?)
    }

    /// Parse a ciphertext that claims to be under this key.
    pub fn ciphertext_from_bytes(&self, bytes: &[u8]) -> Result<Ciphertext, He2Error> {
        if bytes.len() < 9 {
            return Err(He2Error::Decode("ciphertext header truncated"));
        }
        let level = Level::from_u8(bytes[0]).ok_or(He2Error::Decode("bad level byte"))?;
        let key_id = u32::from_le_bytes(bytes[1..5].try_into().expect("4 bytes"));
        if key_id != self.key_id {
            return Err(He2Error::KeyMismatch { expected: self.key_id, got: key_id });
        }
        let len = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes")) as usize;
        let payload = bytes
            .get(9..9 + len)
            .ok_or(He2Error::Decode("ciphertext payload truncated"))?;
        if bytes.len() != 9 + len {
            return Err(He2Error::Decode("trailing bytes after ciphertext"));
        }
        let payload = match (&self.inner, level) {
            (PkInner::Clear, _) => {
                let arr: [u8; 8] = payload
                    .try_into()
                    .map_err(|_| He2Error::Decode("clear payload must be 8 bytes"))?;
                Payload::Clear(i64::from_le_bytes(arr))
            }
            (PkInner::Crypto(pk), Level::One) => {
                Payload::CryptoOne(pk.ciphertext_one_from_bytes(payload)?)
            }
            (PkInner::Crypto(pk), Level::Two) => {
                Payload::CryptoTwo(pk.ciphertext_two_from_bytes(payload)?)
            }
        };
        Ok(Ciphertext { level, key_id, payload })
    }

    /// Wire form of the key itself, for the setup exchange.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.push(match self.kind() {
            BackendKind::Clear => 0u8,
            BackendKind::Crypto => 1u8,
        });
        out.extend_from_slice(&self.key_id.to_le_bytes());
        out.extend_from_slice(&self.bound.to_le_bytes());
        if let PkInner::Crypto(pk) = &self.inner {
            out.extend_from_slice(&pk.to_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<PublicKey, He2Error> {
        if bytes.len() < 13 {
            return Err(He2Error::Decode("public key truncated"));
        }
        let key_id = u32::from_le_bytes(bytes[1..5].try_into().expect("4 bytes"));
        let bound = i64::from_le_bytes(bytes[5..13].try_into().expect("8 bytes"));
        if bound < 1 {
            return Err(He2Error::Decode("public key bound must be positive"));
        }
        let inner = match bytes[0] {
            0 if bytes.len() == 13 => PkInner::Clear,
            0 => return Err(He2Error::Decode("trailing bytes after clear public key")),
            1 => PkInner::Crypto(bgn::PublicKey::from_bytes(&bytes[13..])?),
            _ => return Err(He2Error::Decode("unknown backend byte")),
        };
        Ok(PublicKey { key_id, bound, inner })
    }
}

impl SecretKey {
    pub fn key_id(&self) -> u32 {
        self.key_id
    }

    pub fn bound(&self) -> i64 {
        self.bound
    }

    /// Decrypt at either level. Fails if the carried value has left the
    /// plaintext window `[-bound, bound]`.
    pub fn decrypt(&self, c: &Ciphertext) -> Result<i64, He2Error> {
        if c.key_id != self.key_id {
            return Err(He2Error::KeyMismatch { expected: self.key_id, got: c.key_id });
        }
        match (&c.payload, &self.inner) {
            (Payload::Clear(v), SkInner::Clear) => {
                if v.abs() > self.bound {
                    return Err(He2Error::DecryptOutOfRange { bound: self.bound });
                }
                Ok(*v)
            }
            (Payload::CryptoOne(ct), SkInner::Crypto(sk)) => sk
                .decrypt_one(ct, self.bound)
                .ok_or(He2Error::DecryptOutOfRange { bound: self.bound }),
            (Payload::CryptoTwo(ct), SkInner::Crypto(sk)) => sk
                .decrypt_two(ct, self.bound)
                .ok_or(He2Error::DecryptOutOfRange { bound: self.bound }),
            _ => Err(He2Error::Decode("payload does not match the key's backend")),
        }
    }
}
