//! Two-level homomorphic encryption over a pairing on a supersingular
//! curve.
//!
//! Key generation picks secret primes q1, q2, sets n = q1*q2, and searches
//! for a cofactor c (a multiple of 4) making q = c*n - 1 prime; the curve
//! y^2 = x^3 + x over F_q then has q + 1 = c*n points and supports the
//! distortion map (x, y) -> (-x, iy) into F_q^2. Level-1 ciphertexts are
//! curve points [m]g + [r]h where g has order n and h order q1; level-2
//! ciphertexts are raw Miller values in F_q^2, kept *before* the final
//! exponentiation, which is a multiplicative map and therefore commutes
//! with the additive homomorphism (multiplication of raw values) and with
//! scalar exponentiation. Decryption applies the final exponentiation
//! once, raises to q1 to strip the blinding component, and finishes with a
//! baby-step/giant-step search over the plaintext window; level-1
//! decryption does the same search in the curve group after multiplying by
//! q1. Search tables are cached per window radius.
//!
//! Ciphertexts and keys are held in canonical byte form internally, so
//! their encodings never depend on field context.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::RngCore;

use super::He2Error;

mod curve;
mod fp;
mod fq2;
mod pairing;

use curve::{Affine, CurveCtx};
use fp::FieldCtx;
use fq2::{ExtCtx, Fq2};
use pairing::{final_exponentiation, MillerChain};

/// Largest plaintext window radius the backend will accept. Decryption
/// cost grows with the square root of the window, so large radii are
/// legal but slow.
pub const MAX_BOUND: i64 = 1 << 40;

/// Miller-Rabin rounds; error probability is at most 4^-24 per accepted
/// candidate.
const MR_ROUNDS: usize = 24;

const POINT_BYTES: usize = 81;
const PAIR_BYTES: usize = 80;
/// Wire width of the group order n (two 128-bit prime factors).
const ORDER_BYTES: usize = 32;

// ---------------------------------------------------------------------------
// Number theory helpers.

fn is_probable_prime(n: &BigUint, rng: &mut (impl RngCore + ?Sized)) -> bool {
    const SMALL: [u32; 15] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];
    for p in SMALL {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    if *n < BigUint::from(2u32) || n.bit(0) == false {
        return false;
    }
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().expect("n > 1");
    let d = &n_minus_1 >> s;
    'witness: for _ in 0..MR_ROUNDS {
        let a = rng.gen_biguint_range(&two, &n_minus_1);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A random prime of exactly `bits` bits.
fn random_prime(bits: u64, rng: &mut (impl RngCore + ?Sized)) -> BigUint {
    loop {
        let mut cand = rng.gen_biguint(bits);
        cand.set_bit(bits - 1, true);
        cand.set_bit(0, true);
        if is_probable_prime(&cand, rng) {
            return cand;
        }
    }
}

/// Little-endian limbs, never empty.
fn limbs_of(v: &BigUint) -> Vec<u64> {
    let limbs = v.to_u64_digits();
    if limbs.is_empty() { vec![0] } else { limbs }
}

fn fp_of(v: &BigUint) -> Option<fp::Fp> {
    let limbs = v.to_u64_digits();
    if limbs.len() > fp::LIMBS {
        return None;
    }
    let mut out = fp::ZERO;
    out[..limbs.len()].copy_from_slice(&limbs);
    Some(out)
}

/// Uniform scalar in [1, n).
fn random_scalar(n: &BigUint, rng: &mut (impl RngCore + ?Sized)) -> BigUint {
    loop {
        let r = rng.gen_biguint_below(n);
        if !r.is_zero() {
            return r;
        }
    }
}

// ---------------------------------------------------------------------------
// Key material.

#[derive(Clone)]
pub struct PublicKey {
    fctx: FieldCtx,
    n: BigUint,
    n_limbs: Vec<u64>,
    cofactor_limbs: Vec<u64>,
    /// Generator of the full order-n subgroup (Montgomery coordinates).
    g: Affine,
    /// Blinding generator of order q1.
    h: Affine,
    /// Raw pairing value of (g, g); encrypts the message component.
    m_gg: Fq2,
    /// Raw pairing value of (g, h); encrypts the blinding component.
    m_gh: Fq2,
    /// Miller chain of g, reused by promotion and the pairing values.
    g_chain: MillerChain,
}

impl PartialEq for PublicKey {
    fn eq(&self, other: &Self) -> bool {
        self.to_bytes() == other.to_bytes()
    }
}

impl Eq for PublicKey {}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey(n = {} bits)", self.n.bits())
    }
}

#[derive(Clone)]
pub struct SecretKey {
    pk: PublicKey,
    q1_limbs: Vec<u64>,
    q2: BigUint,
    /// [q1]g, a generator of the order-q2 subgroup the message lands in.
    g1: Affine,
    /// Final-exponentiated pairing of (g, g) raised to q1; the discrete-log
    /// base for level-2 decryption.
    t_base: Fq2,
    point_tables: Arc<Mutex<HashMap<i64, Arc<PointTable>>>>,
    value_tables: Arc<Mutex<HashMap<i64, Arc<ValueTable>>>>,
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretKey(n = {} bits)", self.pk.n.bits())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CiphertextOne {
    bytes: [u8; POINT_BYTES],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CiphertextTwo {
    bytes: [u8; PAIR_BYTES],
}

/// Generate a key pair; `bits` is the combined size of the two secret
/// primes. The envelope restricts which sizes reach this point.
pub fn keygen(bits: u32, rng: &mut (impl RngCore + ?Sized)) -> (PublicKey, SecretKey) {
    assert!(bits >= 16 && bits % 2 == 0, "unsupported group size");
    let half = u64::from(bits / 2);
    let q1 = random_prime(half, rng);
    let q2 = loop {
        let cand = random_prime(half, rng);
        if cand != q1 {
            break cand;
        }
    };
    build_keys(q1, q2, rng)
}

/// Toy key construction from fixed small primes, for tests that need the
/// full pipeline without full-size parameters.
#[cfg(test)]
pub(crate) fn keygen_from_primes(
    q1: u64,
    q2: u64,
    rng: &mut (impl RngCore + ?Sized),
) -> (PublicKey, SecretKey) {
    build_keys(BigUint::from(q1), BigUint::from(q2), rng)
}

fn build_keys(q1: BigUint, q2: BigUint, rng: &mut (impl RngCore + ?Sized)) -> (PublicKey, SecretKey) {
    let n = &q1 * &q2;
    // Find the smallest workable cofactor: c = 0 mod 4 makes q = 3 mod 4,
    // so square roots and the distortion map work out.
    let mut cofactor = BigUint::from(4u32);
    let q = loop {
        let cand = &cofactor * &n - 1u32;
        if is_probable_prime(&cand, rng) {
            break cand;
        }
        cofactor += 4u32;
    };
    let fctx = FieldCtx::new(fp_of(&q).expect("modulus fits the field width"));
    let n_limbs = limbs_of(&n);
    let cofactor_limbs = limbs_of(&cofactor);
    let q1_limbs = limbs_of(&q1);
    let q2_limbs = limbs_of(&q2);

    let curve = CurveCtx::new(&fctx);
    let ext = ExtCtx::new(&fctx);

    // g: multiply a random point by the cofactor and insist on order
    // exactly n, with a non-degenerate self-pairing of full order.
    let (g, m_gg, g_chain) = loop {
        let p0 = curve.random_point(rng);
        let g = curve.to_affine(&curve.scalar_mul(&p0, &cofactor_limbs));
        if g == Affine::Infinity
            || curve.to_affine(&curve.scalar_mul(&g, &q1_limbs)) == Affine::Infinity
            || curve.to_affine(&curve.scalar_mul(&g, &q2_limbs)) == Affine::Infinity
        {
            continue;
        }
        debug_assert_eq!(
            curve.to_affine(&curve.scalar_mul(&g, &n_limbs)),
            Affine::Infinity
        );
        let chain = MillerChain::build(&fctx, &g, &n_limbs);
        let m_gg = chain.eval(&fctx, &g);
        let w = final_exponentiation(&fctx, &cofactor_limbs, &m_gg);
        if w.is_zero()
            || w == ext.one()
            || ext.pow(&w, &q1_limbs) == ext.one()
            || ext.pow(&w, &q2_limbs) == ext.one()
        {
            continue;
        }
        break (g, m_gg, chain);
    };

    // h: order exactly q1, pairing non-trivially with g.
    let cq2_limbs = limbs_of(&(&cofactor * &q2));
    let (h, m_gh) = loop {
        let p1 = curve.random_point(rng);
        let h = curve.to_affine(&curve.scalar_mul(&p1, &cq2_limbs));
        if h == Affine::Infinity {
            continue;
        }
        debug_assert_eq!(
            curve.to_affine(&curve.scalar_mul(&h, &q1_limbs)),
            Affine::Infinity
        );
        let m_gh = g_chain.eval(&fctx, &h);
        let v = final_exponentiation(&fctx, &cofactor_limbs, &m_gh);
        if v.is_zero() || v == ext.one() {
            continue;
        }
        debug_assert_eq!(ext.pow(&v, &q1_limbs), ext.one());
        break (h, m_gh);
    };

    let g1 = curve.to_affine(&curve.scalar_mul(&g, &q1_limbs));
    let w = final_exponentiation(&fctx, &cofactor_limbs, &m_gg);
    let t_base = ext.pow(&w, &q1_limbs);

    let pk = PublicKey { fctx, n, n_limbs, cofactor_limbs, g, h, m_gg, m_gh, g_chain };
    let sk = SecretKey {
        pk: pk.clone(),
        q1_limbs,
        q2,
        g1,
        t_base,
        point_tables: Arc::new(Mutex::new(HashMap::new())),
        value_tables: Arc::new(Mutex::new(HashMap::new())),
    };
    (pk, sk)
}

// ---------------------------------------------------------------------------
// Public-key operations.

impl PublicKey {
    fn curve(&self) -> CurveCtx<'_> {
        CurveCtx::new(&self.fctx)
    }

    fn ext(&self) -> ExtCtx<'_> {
        ExtCtx::new(&self.fctx)
    }

    fn decode_one(&self, c: &CiphertextOne) -> Affine {
        self.curve().point_from_bytes(&c.bytes).expect("level-1 ciphertext invariant")
    }

    fn decode_two(&self, c: &CiphertextTwo) -> Fq2 {
        Fq2::from_bytes(&self.fctx, &c.bytes).expect("level-2 ciphertext invariant")
    }

    fn encode_one(&self, p: &Affine) -> CiphertextOne {
        CiphertextOne { bytes: self.curve().point_to_bytes(p) }
    }

    fn encode_two(&self, z: &Fq2) -> CiphertextTwo {
        CiphertextTwo { bytes: z.to_bytes(&self.fctx) }
    }

    fn scalar_point(&self, p: &Affine, k: i64) -> curve::Jacobian {
        let curve = self.curve();
        let base = if k < 0 { curve.neg(p) } else { *p };
        curve.scalar_mul(&base, &[k.unsigned_abs()])
    }

    fn scalar_value(&self, z: &Fq2, k: i64) -> Fq2 {
        let ext = self.ext();
        let base = if k < 0 { ext.inv(z) } else { *z };
        ext.pow(&base, &[k.unsigned_abs()])
    }

    pub fn encrypt_one(&self, v: i64, rng: &mut (impl RngCore + ?Sized)) -> CiphertextOne {
        let curve = self.curve();
        let r = random_scalar(&self.n, rng);
        let blind = curve.scalar_mul(&self.h, &limbs_of(&r));
        let point = curve.to_affine(&curve.add(&self.scalar_point(&self.g, v), &blind));
        self.encode_one(&point)
    }

    pub fn encrypt_two(&self, v: i64, rng: &mut (impl RngCore + ?Sized)) -> CiphertextTwo {
        let ext = self.ext();
        let r = random_scalar(&self.n, rng);
        let blind = ext.pow(&self.m_gh, &limbs_of(&r));
        let z = ext.mul(&self.scalar_value(&self.m_gg, v), &blind);
        self.encode_two(&z)
    }

    pub fn add_one(&self, a: &CiphertextOne, b: &CiphertextOne) -> CiphertextOne {
        let curve = self.curve();
        let sum = curve.add(
            &curve.to_jacobian(&self.decode_one(a)),
            &curve.to_jacobian(&self.decode_one(b)),
        );
        self.encode_one(&curve.to_affine(&sum))
    }

    pub fn add_two(&self, a: &CiphertextTwo, b: &CiphertextTwo) -> CiphertextTwo {
        let z = self.ext().mul(&self.decode_two(a), &self.decode_two(b));
        self.encode_two(&z)
    }

    pub fn scalar_mul_one(&self, a: &CiphertextOne, k: i64) -> CiphertextOne {
        let curve = self.curve();
        let point = curve.to_affine(&self.scalar_point(&self.decode_one(a), k));
        self.encode_one(&point)
    }

    pub fn scalar_mul_two(&self, a: &CiphertextTwo, k: i64) -> CiphertextTwo {
        let z = self.scalar_value(&self.decode_two(a), k);
        self.encode_two(&z)
    }

    /// Pair two level-1 ciphertexts into a level-2 ciphertext of the
    /// product. Either side at infinity encrypts zero (up to blinding), and
    /// pairs to the unit value.
    pub fn multiply(&self, a: &CiphertextOne, b: &CiphertextOne) -> CiphertextTwo {
        let pa = self.decode_one(a);
        let pb = self.decode_one(b);
        if pa == Affine::Infinity || pb == Affine::Infinity {
            return self.encode_two(&self.ext().one());
        }
        let chain = MillerChain::build(&self.fctx, &pa, &self.n_limbs);
        self.encode_two(&chain.eval(&self.fctx, &pb))
    }

    /// Lift a level-1 ciphertext to level 2 by pairing it with g, reusing
    /// g's precomputed chain.
    pub fn promote(&self, a: &CiphertextOne) -> CiphertextTwo {
        let pa = self.decode_one(a);
        if pa == Affine::Infinity {
            return self.encode_two(&self.ext().one());
        }
        self.encode_two(&self.g_chain.eval(&self.fctx, &pa))
    }

    pub fn ciphertext_one_from_bytes(&self, bytes: &[u8]) -> Result<CiphertextOne, He2Error> {
        if bytes.len() != POINT_BYTES {
            return Err(He2Error::Decode("level-1 ciphertext must be 81 bytes"));
        }
        self.curve()
            .point_from_bytes(bytes)
            .ok_or(He2Error::Decode("level-1 ciphertext is not a curve point"))?;
        let mut out = [0u8; POINT_BYTES];
        out.copy_from_slice(bytes);
        Ok(CiphertextOne { bytes: out })
    }

    pub fn ciphertext_two_from_bytes(&self, bytes: &[u8]) -> Result<CiphertextTwo, He2Error> {
        if bytes.len() != PAIR_BYTES {
            return Err(He2Error::Decode("level-2 ciphertext must be 80 bytes"));
        }
        Fq2::from_bytes(&self.fctx, bytes)
            .ok_or(He2Error::Decode("level-2 ciphertext is not a field pair"))?;
        let mut out = [0u8; PAIR_BYTES];
        out.copy_from_slice(bytes);
        Ok(CiphertextTwo { bytes: out })
    }

    /// Wire form: modulus, group order, then the two generators. Pairing
    /// values and the Miller chain are derived on decode, which also pins
    /// them to the generators.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(40 + ORDER_BYTES + 2 * POINT_BYTES);
        out.extend_from_slice(&fp::limbs_to_bytes(&self.fctx.modulus));
        let mut order = [0u8; ORDER_BYTES];
        let raw = self.n.to_bytes_le();
        order[..raw.len()].copy_from_slice(&raw);
        out.extend_from_slice(&order);
        out.extend_from_slice(&self.curve().point_to_bytes(&self.g));
        out.extend_from_slice(&self.curve().point_to_bytes(&self.h));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<PublicKey, He2Error> {
        if bytes.len() != 40 + ORDER_BYTES + 2 * POINT_BYTES {
            return Err(He2Error::Decode("public key has the wrong length"));
        }
        let q_limbs =
            fp::limbs_from_bytes(&bytes[..40]).ok_or(He2Error::Decode("bad modulus bytes"))?;
        let q = BigUint::from_bytes_le(&bytes[..40]);
        if q.bit(0) == false || (&q % 4u32) != BigUint::from(3u32) || q.bits() < 8 {
            return Err(He2Error::Decode("modulus is not 3 mod 4"));
        }
        let n = BigUint::from_bytes_le(&bytes[40..40 + ORDER_BYTES]);
        if n < BigUint::from(2u32) {
            return Err(He2Error::Decode("group order too small"));
        }
        let q_plus_1 = &q + 1u32;
        if !(&q_plus_1 % &n).is_zero() {
            return Err(He2Error::Decode("group order does not divide the curve order"));
        }
        let cofactor = &q_plus_1 / &n;
        if !(&cofactor % 4u32).is_zero() {
            return Err(He2Error::Decode("curve cofactor must be a multiple of four"));
        }
        let fctx = FieldCtx::new(q_limbs);
        let curve = CurveCtx::new(&fctx);
        let g = curve
            .point_from_bytes(&bytes[72..72 + POINT_BYTES])
            .ok_or(He2Error::Decode("g is not a curve point"))?;
        let h = curve
            .point_from_bytes(&bytes[72 + POINT_BYTES..])
            .ok_or(He2Error::Decode("h is not a curve point"))?;
        if g == Affine::Infinity || h == Affine::Infinity {
            return Err(He2Error::Decode("generators must not be the identity"));
        }
        let n_limbs = limbs_of(&n);
        let cofactor_limbs = limbs_of(&cofactor);
        if curve.to_affine(&curve.scalar_mul(&g, &n_limbs)) != Affine::Infinity
            || curve.to_affine(&curve.scalar_mul(&h, &n_limbs)) != Affine::Infinity
        {
            return Err(He2Error::Decode("generators are outside the order-n subgroup"));
        }
        let g_chain = MillerChain::build(&fctx, &g, &n_limbs);
        let m_gg = g_chain.eval(&fctx, &g);
        let m_gh = g_chain.eval(&fctx, &h);
        let ext = ExtCtx::new(&fctx);
        let w = final_exponentiation(&fctx, &cofactor_limbs, &m_gg);
        if w.is_zero() || w == ext.one() {
            return Err(He2Error::Decode("degenerate pairing for g"));
        }
        Ok(PublicKey { fctx, n, n_limbs, cofactor_limbs, g, h, m_gg, m_gh, g_chain })
    }
}

// ---------------------------------------------------------------------------
// Decryption.

/// Baby-step table over the curve group for the window [-M, M], with the
/// giant step and shift precomputed.
struct PointTable {
    baby: HashMap<[u8; POINT_BYTES], u64>,
    giant_neg: Affine,
    shift: Affine,
    step: u64,
    span: u64,
}

/// The same table shape over the pairing value group.
struct ValueTable {
    baby: HashMap<[u8; PAIR_BYTES], u64>,
    giant_neg: Fq2,
    shift: Fq2,
    step: u64,
    span: u64,
}

fn table_step(span: u64) -> u64 {
    let mut s = ((span + 1) as f64).sqrt().ceil() as u64;
    while s * s < span + 1 {
        s += 1;
    }
    s.max(1)
}

impl CiphertextOne {
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bytes.to_vec()
    }
}

impl CiphertextTwo {
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bytes.to_vec()
    }
}

impl SecretKey {
    /// The search window must fit inside a single residue class mod q2, or
    /// recovered values would be ambiguous.
    fn window_is_unambiguous(&self, bound: i64) -> bool {
        BigUint::from(2 * bound as u64 + 1) <= self.q2
    }

    fn point_table(&self, bound: i64) -> Arc<PointTable> {
        let mut tables = self.point_tables.lock().expect("table lock");
        if let Some(t) = tables.get(&bound) {
            return Arc::clone(t);
        }
        let curve = self.pk.curve();
        let span = 2 * bound as u64;
        let step = table_step(span);
        let base = curve.to_jacobian(&self.g1);
        let mut running = curve.infinity();
        let mut points = Vec::with_capacity(step as usize);
        for _ in 0..step {
            points.push(running);
            running = curve.add(&running, &base);
        }
        let baby = curve
            .batch_to_affine(&points)
            .iter()
            .enumerate()
            .map(|(i, p)| (curve.point_to_bytes(p), i as u64))
            .collect();
        let table = Arc::new(PointTable {
            baby,
            // `running` holds [step]g1 after the loop.
            giant_neg: curve.neg(&curve.to_affine(&running)),
            shift: curve.to_affine(&curve.scalar_mul(&self.g1, &[bound as u64])),
            step,
            span,
        });
        tables.insert(bound, Arc::clone(&table));
        table
    }

    fn value_table(&self, bound: i64) -> Arc<ValueTable> {
        let mut tables = self.value_tables.lock().expect("table lock");
        if let Some(t) = tables.get(&bound) {
            return Arc::clone(t);
        }
        let ext = self.pk.ext();
        let span = 2 * bound as u64;
        let step = table_step(span);
        let mut baby = HashMap::with_capacity(step as usize);
        let mut running = ext.one();
        for i in 0..step {
            baby.entry(running.to_bytes(&self.pk.fctx)).or_insert(i);
            running = ext.mul(&running, &self.t_base);
        }
        let table = Arc::new(ValueTable {
            baby,
            giant_neg: ext.inv(&running),
            shift: ext.pow(&self.t_base, &[bound as u64]),
            step,
            span,
        });
        tables.insert(bound, Arc::clone(&table));
        table
    }

    /// Recover m from [m]g + [r]h: multiplying by q1 kills the blinding
    /// component and leaves [m]([q1]g), found by a two-sided
    /// baby-step/giant-step search over [-bound, bound].
    pub fn decrypt_one(&self, c: &CiphertextOne, bound: i64) -> Option<i64> {
        if bound < 1 || !self.window_is_unambiguous(bound) {
            return None;
        }
        let curve = self.pk.curve();
        let table = self.point_table(bound);
        let target = curve.scalar_mul(&self.pk.decode_one(c), &self.q1_limbs);
        let mut probe = curve.add(&target, &curve.to_jacobian(&table.shift));
        let giant = curve.to_jacobian(&table.giant_neg);
        let giants = table.span / table.step;
        let mut candidates = Vec::with_capacity(giants as usize + 1);
        for _ in 0..=giants {
            candidates.push(probe);
            probe = curve.add(&probe, &giant);
        }
        for (j, point) in curve.batch_to_affine(&candidates).iter().enumerate() {
            if let Some(&i) = table.baby.get(&curve.point_to_bytes(point)) {
                let shifted = j as u64 * table.step + i;
                let value = shifted as i128 - bound as i128;
                if value.unsigned_abs() <= bound as u128 {
                    return Some(value as i64);
                }
            }
        }
        None
    }

    /// Recover m from a raw level-2 value: apply the final exponentiation,
    /// raise to q1 to strip every blinding factor, and search the window.
    pub fn decrypt_two(&self, c: &CiphertextTwo, bound: i64) -> Option<i64> {
        if bound < 1 || !self.window_is_unambiguous(bound) {
            return None;
        }
        let ext = self.pk.ext();
        let z = self.pk.decode_two(c);
        if z.is_zero() {
            return None;
        }
        let table = self.value_table(bound);
        let w = final_exponentiation(&self.pk.fctx, &self.pk.cofactor_limbs, &z);
        let t = ext.pow(&w, &self.q1_limbs);
        let mut probe = ext.mul(&t, &table.shift);
        let giants = table.span / table.step;
        for j in 0..=giants {
            if let Some(&i) = table.baby.get(&probe.to_bytes(&self.pk.fctx)) {
                let shifted = j * table.step + i;
                let value = shifted as i128 - bound as i128;
                if value.unsigned_abs() <= bound as u128 {
                    return Some(value as i64);
                }
                return None;
            }
            probe = ext.mul(&probe, &table.giant_neg);
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    /// 31-bit toy primes: big enough that random pairing degeneracies are
    /// negligible, small enough that key generation is instant.
    const TOY_Q1: u64 = 2_147_483_629;
    const TOY_Q2: u64 = 2_147_483_647;

    fn toy_keys(seed: u64) -> (PublicKey, SecretKey) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        keygen_from_primes(TOY_Q1, TOY_Q2, &mut rng)
    }

    #[test]
    fn level_one_roundtrip_add_scalar() {
        let (pk, sk) = toy_keys(300);
        let mut rng = ChaCha20Rng::seed_from_u64(301);
        for v in [-10i64, -3, -1, 0, 1, 2, 7, 10] {
            let c = pk.encrypt_one(v, &mut rng);
            assert_eq!(sk.decrypt_one(&c, 10), Some(v), "v = {v}");
        }
        let a = pk.encrypt_one(6, &mut rng);
        let b = pk.encrypt_one(-9, &mut rng);
        assert_eq!(sk.decrypt_one(&pk.add_one(&a, &b), 20), Some(-3));
        assert_eq!(sk.decrypt_one(&pk.scalar_mul_one(&a, -4), 30), Some(-24));
        assert_eq!(sk.decrypt_one(&pk.scalar_mul_one(&a, 0), 5), Some(0));
        // Out-of-window values are refused rather than wrapped.
        assert_eq!(sk.decrypt_one(&pk.encrypt_one(9, &mut rng), 5), None);
    }

    #[test]
    fn level_two_roundtrip_add_scalar() {
        let (pk, sk) = toy_keys(302);
        let mut rng = ChaCha20Rng::seed_from_u64(303);
        for v in [-8i64, -1, 0, 1, 5, 8] {
            let c = pk.encrypt_two(v, &mut rng);
            assert_eq!(sk.decrypt_two(&c, 8), Some(v), "v = {v}");
        }
        let a = pk.encrypt_two(7, &mut rng);
        let b = pk.encrypt_two(-2, &mut rng);
        assert_eq!(sk.decrypt_two(&pk.add_two(&a, &b), 10), Some(5));
        assert_eq!(sk.decrypt_two(&pk.scalar_mul_two(&a, -3), 25), Some(-21));
        assert_eq!(sk.decrypt_two(&pk.scalar_mul_two(&b, 0), 5), Some(0));
        assert_eq!(sk.decrypt_two(&pk.encrypt_two(-7, &mut rng), 5), None);
    }

    #[test]
    fn multiply_and_promote_compose_with_addition() {
        let (pk, sk) = toy_keys(304);
        let mut rng = ChaCha20Rng::seed_from_u64(305);
        for (x, y) in [(3i64, 4i64), (-3, 4), (0, 5), (7, -7), (1, 1), (0, 0)] {
            let cx = pk.encrypt_one(x, &mut rng);
            let cy = pk.encrypt_one(y, &mut rng);
            let product = pk.multiply(&cx, &cy);
            assert_eq!(sk.decrypt_two(&product, 60), Some(x * y), "{x} * {y}");
            let lifted = pk.promote(&cx);
            assert_eq!(sk.decrypt_two(&lifted, 10), Some(x), "promote {x}");
            // Mix a product, a promotion, and a fresh level-2 encryption.
            let fresh = pk.encrypt_two(5, &mut rng);
            let mixed = pk.add_two(&pk.add_two(&product, &lifted), &fresh);
            assert_eq!(sk.decrypt_two(&mixed, 80), Some(x * y + x + 5));
        }
    }

    #[test]
    fn ciphertext_wire_roundtrip_and_rejection() {
        let (pk, sk) = toy_keys(306);
        let mut rng = ChaCha20Rng::seed_from_u64(307);
        let c1 = pk.encrypt_one(4, &mut rng);
        let back1 = pk.ciphertext_one_from_bytes(&c1.to_bytes()).unwrap();
        assert_eq!(back1, c1);
        assert_eq!(sk.decrypt_one(&back1, 5), Some(4));
        let c2 = pk.encrypt_two(-4, &mut rng);
        let back2 = pk.ciphertext_two_from_bytes(&c2.to_bytes()).unwrap();
        assert_eq!(back2, c2);
        assert_eq!(sk.decrypt_two(&back2, 5), Some(-4));
        // Corrupted points and truncation are rejected.
        let mut bad = c1.to_bytes();
        bad[3] ^= 0x40;
        assert!(pk.ciphertext_one_from_bytes(&bad).is_err());
        assert!(pk.ciphertext_one_from_bytes(&c1.to_bytes()[..80]).is_err());
        assert!(pk.ciphertext_two_from_bytes(&c2.to_bytes()[..79]).is_err());
    }

    #[test]
    fn public_key_wire_roundtrip_preserves_interoperability() {
        let (pk, sk) = toy_keys(308);
        let mut rng = ChaCha20Rng::seed_from_u64(309);
        let decoded = PublicKey::from_bytes(&pk.to_bytes()).unwrap();
        assert_eq!(decoded, pk);
        // A ciphertext produced under the decoded key decrypts under the
        // original secret key: this is exactly the peer's situation.
        let c = decoded.encrypt_one(6, &mut rng);
        assert_eq!(sk.decrypt_one(&c, 10), Some(6));
        let c2 = decoded.encrypt_two(-6, &mut rng);
        assert_eq!(sk.decrypt_two(&c2, 10), Some(-6));
        let product = decoded.multiply(&c, &decoded.encrypt_one(2, &mut rng));
        assert_eq!(sk.decrypt_two(&product, 20), Some(12));
        // Truncated or non-divisible orders are rejected.
        assert!(PublicKey::from_bytes(&pk.to_bytes()[..100]).is_err());
        let mut bad = pk.to_bytes();
        bad[40] ^= 1; // perturb n so it no longer divides q + 1
        assert!(PublicKey::from_bytes(&bad).is_err());
    }

    #[test]
    fn keygen_is_deterministic_per_seed() {
        let (pk_a, _) = toy_keys(310);
        let (pk_b, _) = toy_keys(310);
        let (pk_c, _) = toy_keys(311);
        assert_eq!(pk_a.to_bytes(), pk_b.to_bytes());
        assert_ne!(pk_a.to_bytes(), pk_c.to_bytes());
        let mut rng_a = ChaCha20Rng::seed_from_u64(312);
        let mut rng_b = ChaCha20Rng::seed_from_u64(312);
        assert_eq!(
            pk_a.encrypt_one(3, &mut rng_a).to_bytes(),
            pk_b.encrypt_one(3, &mut rng_b).to_bytes()
        );
    }

    #[test]
    fn full_size_keys_smoke() {
        let mut rng = ChaCha20Rng::seed_from_u64(313);
        let (pk, sk) = keygen(256, &mut rng);
        assert!(pk.n.bits() >= 255);
        for v in [-37i64, 0, 1, 1000] {
            assert_eq!(sk.decrypt_one(&pk.encrypt_one(v, &mut rng), 1000), Some(v));
        }
        let a = pk.encrypt_one(21, &mut rng);
        let b = pk.encrypt_one(-2, &mut rng);
        assert_eq!(sk.decrypt_two(&pk.multiply(&a, &b), 50), Some(-42));
        assert_eq!(sk.decrypt_two(&pk.promote(&b), 5), Some(-2));
        let decoded = PublicKey::from_bytes(&pk.to_bytes()).unwrap();
        let c = decoded.encrypt_two(17, &mut rng);
        assert_eq!(sk.decrypt_two(&c, 20), Some(17));
    }
}
