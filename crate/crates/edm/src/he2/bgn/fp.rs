//! Prime-field arithmetic on 320-bit Montgomery residues.
//!
//! The base field modulus is a runtime parameter (it comes out of key
//! generation), so a [`FieldCtx`] carries the modulus and the Montgomery
//! constants, and field elements are plain `[u64; 5]` limb arrays in
//! Montgomery form. Five limbs cover the ~258-bit moduli key generation
//! produces, with headroom.

/// Number of 64-bit limbs in a field element.
pub const LIMBS: usize = 5;

/// A field element in Montgomery form, least-significant limb first.
pub type Fp = [u64; LIMBS];

pub const ZERO: Fp = [0; LIMBS];

/// Montgomery context for an odd prime modulus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldCtx {
    pub modulus: Fp,
    /// `-modulus^{-1} mod 2^64`.
    n0: u64,
    /// `2^640 mod modulus`, for conversion into Montgomery form.
    r2: Fp,
    /// `2^320 mod modulus`: the Montgomery representation of 1.
    pub one: Fp,
}

/// a + b with carry propagation; returns the final carry.
fn adc(a: &mut Fp, b: &Fp) -> u64 {
    let mut carry = 0u128;
    for i in 0..LIMBS {
        let t = a[i] as u128 + b[i] as u128 + carry;
        a[i] = t as u64;
        carry = t >> 64;
    }
    carry as u64
}

/// a - b with borrow propagation; returns the final borrow (0 or 1).
fn sbb(a: &mut Fp, b: &Fp) -> u64 {
    let mut borrow = 0i128;
    for i in 0..LIMBS {
        let t = a[i] as i128 - b[i] as i128 + borrow;
        a[i] = t as u64;
        borrow = if t < 0 { -1 } else { 0 };
    }
    (-borrow) as u64
}

fn geq(a: &Fp, b: &Fp) -> bool {
    for i in (0..LIMBS).rev() {
        if a[i] != b[i] {
            return a[i] > b[i];
        }
    }
    true
}

impl FieldCtx {
    /// Build a context for an odd modulus given as little-endian limbs.
    pub fn new(modulus: Fp) -> FieldCtx {
        assert!(modulus[0] & 1 == 1, "modulus must be odd");
        // Newton iteration doubles the bits of correctness per step:
        // x <- x * (2 - m*x) mod 2^64.
        let m0 = modulus[0];
        let mut inv = 1u64;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(m0.wrapping_mul(inv)));
        }
        let n0 = inv.wrapping_neg();
        let mut ctx = FieldCtx { modulus, n0, r2: ZERO, one: ZERO };
        // 2^640 mod m by repeated doubling from 1.
        let mut r = [0u64; LIMBS];
        r[0] = 1;
        ctx.reduce_once(&mut r);
        for _ in 0..2 * 64 * LIMBS {
            let carry = {
                let mut c = 0u64;
                for limb in r.iter_mut() {
                    let top = *limb >> 63;
                    *limb = (*limb << 1) | c;
                    c = top;
                }
                c
            };
            if carry == 1 || geq(&r, &ctx.modulus) {
                sbb(&mut r, &ctx.modulus);
            }
        }
        ctx.r2 = r;
        ctx.one = ctx.mont_mul(&r, &[1, 0, 0, 0, 0]);
        ctx
    }

    fn reduce_once(&self, a: &mut Fp) {
        if geq(a, &self.modulus) {
            sbb(a, &self.modulus);
        }
    }

    /// CIOS Montgomery multiplication: a*b*2^{-320} mod m.
    pub fn mont_mul(&self, a: &Fp, b: &Fp) -> Fp {
        let mut t = [0u64; LIMBS + 2];
        for i in 0..LIMBS {
            // t += a[i] * b
            let mut carry = 0u128;
            for j in 0..LIMBS {
                let x = t[j] as u128 + a[i] as u128 * b[j] as u128 + carry;
                t[j] = x as u64;
                carry = x >> 64;
            }
            let x = t[LIMBS] as u128 + carry;
            t[LIMBS] = x as u64;
            t[LIMBS + 1] = (x >> 64) as u64;
            // reduce one limb
            let m = t[0].wrapping_mul(self.n0);
            let mut carry = (t[0] as u128 + m as u128 * self.modulus[0] as u128) >> 64;
            for j in 1..LIMBS {
                let x = t[j] as u128 + m as u128 * self.modulus[j] as u128 + carry;
                t[j - 1] = x as u64;
                carry = x >> 64;
            }
            let x = t[LIMBS] as u128 + carry;
            t[LIMBS - 1] = x as u64;
            t[LIMBS] = t[LIMBS + 1] + (x >> 64) as u64;
            t[LIMBS + 1] = 0;
        }
        let mut out = [0u64; LIMBS];
        out.copy_from_slice(&t[..LIMBS]);
        if t[LIMBS] != 0 || geq(&out, &self.modulus) {
            sbb(&mut out, &self.modulus);
        }
        out
    }

    pub fn sqr(&self, a: &Fp) -> Fp {
        self.mont_mul(a, a)
    }

    pub fn add(&self, a: &Fp, b: &Fp) -> Fp {
        let mut out = *a;
        let carry = adc(&mut out, b);
        if carry != 0 || geq(&out, &self.modulus) {
            sbb(&mut out, &self.modulus);
        }
        out
    }

    pub fn sub(&self, a: &Fp, b: &Fp) -> Fp {
        let mut out = *a;
        if sbb(&mut out, b) != 0 {
            adc(&mut out, &self.modulus);
        }
        out
    }

    pub fn neg(&self, a: &Fp) -> Fp {
        if a == &ZERO {
            ZERO
        } else {
            let mut out = self.modulus;
            sbb(&mut out, a);
            out
        }
    }

    pub fn double(&self, a: &Fp) -> Fp {
        self.add(a, a)
    }

    /// Convert a canonical (non-Montgomery) little-endian value into
    /// Montgomery form. The value must already be reduced.
    pub fn to_mont(&self, raw: &Fp) -> Fp {
        debug_assert!(!geq(raw, &self.modulus));
        self.mont_mul(raw, &self.r2)
    }

    /// Back to canonical form.
    pub fn from_mont(&self, a: &Fp) -> Fp {
        self.mont_mul(a, &[1, 0, 0, 0, 0])
    }

    #[cfg(test)]
    pub fn from_u64(&self, v: u64) -> Fp {
        self.to_mont(&[v, 0, 0, 0, 0])
    }

    /// a^e for a little-endian limb exponent, by square-and-multiply.
    pub fn pow(&self, a: &Fp, e: &[u64]) -> Fp {
        let mut acc = self.one;
        let mut started = false;
        for &limb in e.iter().rev() {
            for bit in (0..64).rev() {
                if started {
                    acc = self.sqr(&acc);
                }
                if (limb >> bit) & 1 == 1 {
                    if started {
                        acc = self.mont_mul(&acc, a);
                    } else {
                        acc = *a;
                        started = true;
                    }
                }
            }
        }
        if started {
            acc
        } else {
            self.one
        }
    }

    /// Multiplicative inverse by Fermat's little theorem; zero maps to zero.
    pub fn inv(&self, a: &Fp) -> Fp {
        let mut e = self.modulus;
        sbb(&mut e, &[2, 0, 0, 0, 0]);
        self.pow(a, &e)
    }

    /// Invert a batch with Montgomery's trick: one inversion plus three
    /// multiplications per element. Zero entries are left as zero.
    pub fn batch_inv(&self, values: &mut [Fp]) {
        let mut prefix = Vec::with_capacity(values.len());
        let mut acc = self.one;
        for v in values.iter() {
            prefix.push(acc);
            if *v != ZERO {
                acc = self.mont_mul(&acc, v);
            }
        }
        let mut inv_acc = self.inv(&acc);
        for i in (0..values.len()).rev() {
            if values[i] != ZERO {
                let original = values[i];
                values[i] = self.mont_mul(&inv_acc, &prefix[i]);
                inv_acc = self.mont_mul(&inv_acc, &original);
            }
        }
    }

    /// Square root by the `(q+1)/4` exponent, valid because the modulus is
    /// `3 mod 4`; `None` when the input is not a square.
    pub fn sqrt(&self, a: &Fp) -> Option<Fp> {
        let mut e = self.modulus;
        adc(&mut e, &[1, 0, 0, 0, 0]);
        // Divide by 4: the sum never overflows 320 bits for our moduli
        // (they are at most ~258 bits).
        for _ in 0..2 {
            let mut borrow_in = 0u64;
            for limb in e.iter_mut().rev() {
                let new_carry = *limb & 1;
                *limb = (*limb >> 1) | (borrow_in << 63);
                borrow_in = new_carry;
            }
        }
        let r = self.pow(a, &e);
        if self.sqr(&r) == *a {
            Some(r)
        } else {
            None
        }
    }

}

/// Little-endian bytes (40 per element) for a canonical-form value.
pub fn limbs_to_bytes(limbs: &Fp) -> [u8; 8 * LIMBS] {
    let mut out = [0u8; 8 * LIMBS];
    for (i, l) in limbs.iter().enumerate() {
        out[8 * i..8 * i + 8].copy_from_slice(&l.to_le_bytes());
    }
    out
}

pub fn limbs_from_bytes(bytes: &[u8]) -> Option<Fp> {
    if bytes.len() != 8 * LIMBS {
        return None;
    }
    let mut out = ZERO;
    for (i, chunk) in bytes.chunks_exact(8).enumerate() {
        out[i] = u64::from_le_bytes(chunk.try_into().expect("8 bytes"));
    }
    Some(out)
}

/// True when `a < b` as little-endian limb numbers.
pub fn limbs_less(a: &Fp, b: &Fp) -> bool {
    !geq(a, b)
}
