//! Rolling hash used for tentative node labels, plus the modulus-sizing
//! arithmetic that turns a target conflict probability into a modulus.
//!
//! A sequence x_1 .. x_l of symbols (each < b) hashes to
//! `sum x_i * b^(l-i) mod m`. Hashes of adjacent sequences combine in O(1)
//! given cached powers of b, which is what lets every internal parse-tree
//! node be labeled from its children's labels without rehashing its yield.

use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::Mutex;
use thiserror::Error;

/// Relative slack applied when evaluating the modulus bound. The bound's
/// customary "round" moduli sit within ~1e-6 of exact equality (they are
/// rounded solutions of the underlying equation), so an exact comparison
/// would reject them; anything beyond this slack is a genuine violation.
const BOUND_RELATIVE_GUARD: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum HashError {
    #[error("invalid hash config: base {b} and modulus {m} must both be >= 2")]
    InvalidConfig { b: u64, m: u64 },
    #[error("symbol {symbol} at position {position} is outside the alphabet [0, {b})")]
    SymbolOutOfRange { symbol: u64, position: usize, b: u64 },
    #[error("probability {0} is outside the open interval (0, 1)")]
    InvalidProbability(f64),
    #[error("combined length overflows")]
    LengthOverflow,
}

/// Base and modulus of the rolling hash. Both parties must share this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HashConfig {
    /// Alphabet size; symbols are integers in [0, b).
    pub b: u64,
    /// Modulus; hash values are integers in [0, m).
    pub m: u64,
}

impl HashConfig {
    pub fn new(b: u64, m: u64) -> Result<Self, HashError> {
        if b < 2 || m < 2 {
            return Err(HashError::InvalidConfig { b, m });
        }
        Ok(HashConfig { b, m })
    }
}

impl Default for HashConfig {
    /// Byte alphabet with the smallest of the standard moduli.
    fn default() -> Self {
        HashConfig { b: 256, m: 1031 }
    }
}

/// Hash of a symbol sequence together with the sequence length, which is
/// what [`combine`] needs to shift the left operand past the right one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HashValue {
    /// The hash, in [0, m).
    pub value: u64,
    /// Length of the hashed sequence.
    pub length: u64,
}

impl HashValue {
    /// Hash of the empty sequence; neutral element of [`combine`].
    pub const EMPTY: HashValue = HashValue { value: 0, length: 0 };
}

/// Hash a symbol sequence. Symbols must lie in [0, b).
pub fn hash(symbols: &[u64], cfg: HashConfig) -> Result<HashValue, HashError> {
    let mut acc: u64 = 0;
    for (position, &symbol) in symbols.iter().enumerate() {
        if symbol >= cfg.b {
            return Err(HashError::SymbolOutOfRange { symbol, position, b: cfg.b });
        }
        acc = ((acc as u128 * cfg.b as u128 + symbol as u128) % cfg.m as u128) as u64;
    }
    Ok(HashValue { value: acc, length: symbols.len() as u64 })
}

/// Hash of the concatenation of two hashed sequences:
/// `value = hx * b^len(hy) + hy mod m`. Satisfies
/// `combine(hash(x), hash(y)) == hash(x ++ y)` for any split point.
pub fn combine(hx: HashValue, hy: HashValue, cfg: HashConfig) -> Result<HashValue, HashError> {
    let length = hx.length.checked_add(hy.length).ok_or(HashError::LengthOverflow)?;
    let shift = pow_b(cfg, hy.length);
    let value =
        ((hx.value as u128 * shift as u128 + hy.value as u128) % cfg.m as u128) as u64;
    Ok(HashValue { value, length })
}

/// Cache of powers b^k mod m, grown on demand and shared across threads.
static POW_CACHE: Lazy<Mutex<HashMap<HashConfig, Vec<u64>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn pow_b(cfg: HashConfig, k: u64) -> u64 {
    // Powers are dense in [0, yield length], so a growable table beats
    // repeated square-and-multiply for tree construction. Fall back to
    // square-and-multiply for isolated huge exponents.
    const TABLE_LIMIT: u64 = 1 << 24;
    if k >= TABLE_LIMIT {
        return mod_pow(cfg.b % cfg.m, k, cfg.m);
    }
    let mut cache = POW_CACHE.lock().expect("power cache poisoned");
    let powers = cache.entry(cfg).or_insert_with(|| vec![1 % cfg.m]);
    while (powers.len() as u64) <= k {
        let last = *powers.last().expect("cache is never empty");
        powers.push(((last as u128 * cfg.b as u128) % cfg.m as u128) as u64);
    }
    powers[k as usize]
}

fn mod_pow(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc: u64 = 1 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = ((acc as u128 * base as u128) % m as u128) as u64;
        }
        base = ((base as u128 * base as u128) % m as u128) as u64;
        exp >>= 1;
    }
    acc
}

/// Probability that n uniformly distributed hash values in [0, m) contain at
/// least one collision: `1 - exp(-n^2 / 2m)`. Exactly 0 for n <= 1, where no
/// pair exists.
pub fn conflict_probability(n: u64, m: u64) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let n2 = (n as u128 * n as u128) as f64;
    1.0 - (-n2 / (2.0 * m as f64)).exp()
}

/// Whether `n <= -ln(1-p) * sqrt(2m)` holds, i.e. whether modulus m keeps the
/// conflict probability for n labels under p by the conservative sizing rule.
///
/// Evaluated as `n^2 <= ln(1-p)^2 * 2m` with a relative guard of 1e-6; ties
/// resolve to satisfied. This rule overshoots the modulus the probability
/// bound actually requires — see [`check_bound_exact`] for the direct
/// inversion.
pub fn check_bound(n: u64, p: f64, m: u64) -> Result<bool, HashError> {
    let log_term = checked_neg_ln_1p(p)?;
    let n2 = (n as u128 * n as u128) as f64;
    let rhs2 = log_term * log_term * 2.0 * m as f64;
    Ok(n2 <= rhs2 * (1.0 + BOUND_RELATIVE_GUARD))
}

/// Whether `conflict_probability(n, m) <= p`, by the exact inversion
/// `n^2 <= -2m ln(1-p)` (same relative guard as [`check_bound`]). Accepts
/// much smaller moduli than the conservative rule.
pub fn check_bound_exact(n: u64, p: f64, m: u64) -> Result<bool, HashError> {
    let log_term = checked_neg_ln_1p(p)?;
    let n2 = (n as u128 * n as u128) as f64;
    let rhs2 = 2.0 * m as f64 * log_term;
    Ok(n2 <= rhs2 * (1.0 + BOUND_RELATIVE_GUARD))
}

fn checked_neg_ln_1p(p: f64) -> Result<f64, HashError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(HashError::InvalidProbability(p));
    }
    Ok(-(1.0 - p).ln())
}

/// Smallest modulus satisfying [`check_bound`] for n labels at probability p.
pub fn min_modulus(n: u64, p: f64) -> Result<u64, HashError> {
    min_modulus_by(n, p, check_bound)
}

/// Smallest modulus satisfying [`check_bound_exact`].
pub fn min_modulus_exact(n: u64, p: f64) -> Result<u64, HashError> {
    min_modulus_by(n, p, check_bound_exact)
}

fn min_modulus_by(
    n: u64,
    p: f64,
    pred: fn(u64, f64, u64) -> Result<bool, HashError>,
) -> Result<u64, HashError> {
    let mut hi: u64 = 2;
    while !pred(n, p, hi)? {
        hi = hi.checked_mul(2).ok_or(HashError::LengthOverflow)?;
    }
    let mut lo: u64 = 2;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(n, p, mid)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn cfg(b: u64, m: u64) -> HashConfig {
        HashConfig::new(b, m).unwrap()
    }

    /// Independent evaluation of the defining sum with big integers:
    /// sum x_i * b^(l-i), reduced once at the end.
    fn bigint_hash(symbols: &[u64], c: HashConfig) -> u64 {
        let mut acc = BigUint::from(0u64);
        let l = symbols.len() as u32;
        for (i, &s) in symbols.iter().enumerate() {
            acc += BigUint::from(s) * BigUint::from(c.b).pow(l - 1 - i as u32);
        }
        let r = acc % BigUint::from(c.m);
        let digits = r.to_u64_digits();
        if digits.is_empty() {
            0
        } else {
            digits[0]
        }
    }

    #[test]
    fn known_values_byte_alphabet() {
        let c = cfg(256, 1031);
        // 'a' = 97, 'b' = 98: 97*256 + 98 = 24930 = 24*1031 + 186
        assert_eq!(hash(&[97], c).unwrap().value, 97);
        assert_eq!(hash(&[97, 98], c).unwrap().value, 186);
        assert_eq!(hash(&[97, 97], c).unwrap().value, 185);
        assert_eq!(hash(&[97, 97, 97, 97], c).unwrap().value, 816);
        assert_eq!(hash(&[97, 98, 99], c).unwrap().value, 289);
    }

    #[test]
    fn matches_bigint_reference() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..200 {
            let b = *[2u64, 7, 256, 1024].iter().nth(rng.gen_range(0..4)).unwrap();
            let m = *[2u64, 1031, 10313, 1_031_347, u32::MAX as u64 + 17]
                .iter()
                .nth(rng.gen_range(0..5))
                .unwrap();
            let c = cfg(b, m);
            let len = rng.gen_range(0..40);
            let symbols: Vec<u64> = (0..len).map(|_| rng.gen_range(0..b)).collect();
            assert_eq!(hash(&symbols, c).unwrap().value, bigint_hash(&symbols, c));
        }
    }

    #[test]
    fn combine_equals_hash_of_concatenation() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let c = cfg(256, 10313);
        for _ in 0..300 {
            let la = rng.gen_range(0..30);
            let lb = rng.gen_range(0..30);
            let xs: Vec<u64> = (0..la).map(|_| rng.gen_range(0..256)).collect();
            let ys: Vec<u64> = (0..lb).map(|_| rng.gen_range(0..256)).collect();
            let hx = hash(&xs, c).unwrap();
            let hy = hash(&ys, c).unwrap();
            let mut cat = xs.clone();
            cat.extend_from_slice(&ys);
            assert_eq!(combine(hx, hy, c).unwrap(), hash(&cat, c).unwrap());
        }
    }

    #[test]
    fn combine_is_associative() {
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let c = cfg(256, 1031);
        for _ in 0..200 {
            let parts: Vec<Vec<u64>> = (0..3)
                .map(|_| (0..rng.gen_range(0..12)).map(|_| rng.gen_range(0..256)).collect())
                .collect();
            let hs: Vec<HashValue> = parts.iter().map(|p| hash(p, c).unwrap()).collect();
            let left = combine(combine(hs[0], hs[1], c).unwrap(), hs[2], c).unwrap();
            let right = combine(hs[0], combine(hs[1], hs[2], c).unwrap(), c).unwrap();
            assert_eq!(left, right);
        }
    }

    #[test]
    fn empty_hash_is_neutral() {
        let c = cfg(256, 1031);
        let h = hash(&[1, 2, 3], c).unwrap();
        assert_eq!(combine(HashValue::EMPTY, h, c).unwrap(), h);
        assert_eq!(combine(h, HashValue::EMPTY, c).unwrap(), h);
        assert_eq!(hash(&[], c).unwrap(), HashValue::EMPTY);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(HashConfig::new(1, 1031).unwrap_err(), HashError::InvalidConfig { b: 1, m: 1031 });
        assert_eq!(HashConfig::new(256, 0).unwrap_err(), HashError::InvalidConfig { b: 256, m: 0 });
        let c = cfg(4, 1031);
        assert_eq!(
            hash(&[0, 4], c).unwrap_err(),
            HashError::SymbolOutOfRange { symbol: 4, position: 1, b: 4 }
        );
        assert!(matches!(check_bound(10, 0.0, 100), Err(HashError::InvalidProbability(_))));
        assert!(matches!(check_bound(10, 1.0, 100), Err(HashError::InvalidProbability(_))));
    }

    #[test]
    fn conflict_probability_values() {
        assert_eq!(conflict_probability(0, 1031), 0.0);
        assert_eq!(conflict_probability(1, 1031), 0.0);
        // High-precision references for 1 - exp(-n^2/2m).
        let cases = [
            (100u64, 1_900_416u64, 0.002627544841470212),
            (100, 1031, 0.9921689644514864),
            (100, 10313, 0.3841950333627746),
        ];
        for (n, m, expected) in cases {
            let got = conflict_probability(n, m);
            assert!((got - expected).abs() < 1e-12, "n={n} m={m}: {got} vs {expected}");
        }
    }

    #[test]
    fn bound_at_the_published_modulus() {
        // The canonical sizing example: n = 100 at p = 0.05 is satisfied by
        // m = 1,900,416 (within the relative guard; the exact real solution
        // is 1,900,416.61..).
        assert!(check_bound(100, 0.05, 1_900_416).unwrap());
        assert!(check_bound(100, 0.05, 1_900_415).unwrap());
        assert!(!check_bound(100, 0.05, 1_900_414).unwrap());
        assert!(!check_bound(100, 0.05, 100_000).unwrap());
        let m = min_modulus(100, 0.05).unwrap();
        assert_eq!(m, 1_900_415);
        assert!(m <= 1_900_416);
        assert!(check_bound(100, 0.05, m).unwrap());
        assert!(!check_bound(100, 0.05, m - 1).unwrap());
    }

    #[test]
    fn exact_bound_is_looser() {
        // Inverting the probability formula directly needs a far smaller
        // modulus than the conservative rule.
        let exact = min_modulus_exact(100, 0.05).unwrap();
        let conservative = min_modulus(100, 0.05).unwrap();
        assert!(exact < conservative, "{exact} vs {conservative}");
        assert!(conflict_probability(100, exact) <= 0.05 * (1.0 + 2e-6));
        assert!(conflict_probability(100, exact - 1) > 0.05 * (1.0 - 2e-6));
    }

    #[test]
    fn min_modulus_is_minimal_across_inputs() {
        let mut rng = ChaCha20Rng::seed_from_u64(14);
        for _ in 0..50 {
            let n = rng.gen_range(2..5000);
            let p = rng.gen_range(0.01..0.9);
            let m = min_modulus(n, p).unwrap();
            assert!(check_bound(n, p, m).unwrap());
            if m > 2 {
                assert!(!check_bound(n, p, m - 1).unwrap());
            }
        }
    }

    #[test]
    fn empirical_conflict_rate_matches_formula() {
        // 1000 trials of hashing 100 random distinct strings; the observed
        // conflict rate must sit within 3 standard errors of the formula.
        let c = cfg(256, 10313);
        let n = 100usize;
        let trials = 1000;
        let mut rng = ChaCha20Rng::seed_from_u64(15);
        let mut conflicted = 0;
        for _ in 0..trials {
            let mut seen = std::collections::HashSet::new();
            let mut strings = std::collections::HashSet::new();
            while strings.len() < n {
                let len = rng.gen_range(8..16);
                let s: Vec<u64> = (0..len).map(|_| rng.gen_range(0..256)).collect();
                strings.insert(s);
            }
            for s in &strings {
                seen.insert(hash(s, c).unwrap().value);
            }
            if seen.len() < n {
                conflicted += 1;
            }
        }
        let p = conflict_probability(n as u64, c.m);
        let rate = conflicted as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!(
            (rate - p).abs() <= 3.0 * sigma,
            "rate {rate} vs formula {p} (3 sigma = {})",
            3.0 * sigma
        );
    }

    #[test]
    fn hash_values_are_uniform_chi_square() {
        // Chi-square goodness of fit of hash values of random strings against
        // the uniform distribution on [0, 1031). Critical value for
        // significance 1e-3 at 1030 degrees of freedom.
        const CHI2_CRITICAL: f64 = 1175.97;
        let c = cfg(256, 1031);
        let samples = 200_000u64;
        let mut rng = ChaCha20Rng::seed_from_u64(16);
        let mut counts = vec![0u64; c.m as usize];
        for _ in 0..samples {
            let len = rng.gen_range(4..12);
            let s: Vec<u64> = (0..len).map(|_| rng.gen_range(0..256)).collect();
            counts[hash(&s, c).unwrap().value as usize] += 1;
        }
        let expected = samples as f64 / c.m as f64;
        let chi2: f64 =
            counts.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
        println!("chi-square {chi2:.1} (critical {CHI2_CRITICAL})");
        assert!(chi2 < CHI2_CRITICAL, "chi-square {chi2} exceeds {CHI2_CRITICAL}");
    }
}
