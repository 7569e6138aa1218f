//! The quadratic extension F_q[i] with i^2 = -1, valid because the base
//! modulus is 3 mod 4. Pairing values live here.

use super::fp::{self, FieldCtx, Fp};

/// `re + im * i`, both components in Montgomery form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fq2 {
    pub re: Fp,
    pub im: Fp,
}

pub const ZERO: Fq2 = Fq2 { re: fp::ZERO, im: fp::ZERO };

impl Fq2 {
    pub fn new(re: Fp, im: Fp) -> Fq2 {
        Fq2 { re, im }
    }

    #[cfg(test)]
    pub fn from_base(re: Fp) -> Fq2 {
        Fq2 { re, im: fp::ZERO }
    }

    pub fn is_zero(&self) -> bool {
        *self == ZERO
    }

    pub fn to_bytes(&self, ctx: &FieldCtx) -> [u8; 80] {
        let mut out = [0u8; 80];
        out[..40].copy_from_slice(&fp::limbs_to_bytes(&ctx.from_mont(&self.re)));
        out[40..].copy_from_slice(&fp::limbs_to_bytes(&ctx.from_mont(&self.im)));
        out
    }

    pub fn from_bytes(ctx: &FieldCtx, bytes: &[u8]) -> Option<Fq2> {
        if bytes.len() != 80 {
            return None;
        }
        let re = fp::limbs_from_bytes(&bytes[..40])?;
        let im = fp::limbs_from_bytes(&bytes[40..])?;
        if !fp::limbs_less(&re, &ctx.modulus) || !fp::limbs_less(&im, &ctx.modulus) {
            return None;
        }
        Some(Fq2 { re: ctx.to_mont(&re), im: ctx.to_mont(&im) })
    }
}

/// Arithmetic on [`Fq2`] values under a base-field context.
pub struct ExtCtx<'a> {
    pub fp: &'a FieldCtx,
}

impl<'a> ExtCtx<'a> {
    pub fn new(fp: &'a FieldCtx) -> Self {
        ExtCtx { fp }
    }

    pub fn one(&self) -> Fq2 {
        Fq2 { re: self.fp.one, im: fp::ZERO }
    }

    #[cfg(test)]
    pub fn add(&self, a: &Fq2, b: &Fq2) -> Fq2 {
        Fq2 { re: self.fp.add(&a.re, &b.re), im: self.fp.add(&a.im, &b.im) }
    }

    /// Karatsuba-style product: three base multiplications.
    pub fn mul(&self, a: &Fq2, b: &Fq2) -> Fq2 {
        let f = self.fp;
        let ac = f.mont_mul(&a.re, &b.re);
        let bd = f.mont_mul(&a.im, &b.im);
        let cross = f.mont_mul(&f.add(&a.re, &a.im), &f.add(&b.re, &b.im));
        Fq2 {
            re: f.sub(&ac, &bd),
            im: f.sub(&f.sub(&cross, &ac), &bd),
        }
    }

    /// (re + im*i)^2 with two base multiplications.
    pub fn sqr(&self, a: &Fq2) -> Fq2 {
        let f = self.fp;
        let re = f.mont_mul(&f.add(&a.re, &a.im), &f.sub(&a.re, &a.im));
        let im = f.double(&f.mont_mul(&a.re, &a.im));
        Fq2 { re, im }
    }

    pub fn conj(&self, a: &Fq2) -> Fq2 {
        Fq2 { re: a.re, im: self.fp.neg(&a.im) }
    }

    /// The q-power Frobenius, which on this extension is conjugation.
    #[cfg(test)]
    pub fn frobenius(&self, a: &Fq2) -> Fq2 {
        self.conj(a)
    }

    pub fn inv(&self, a: &Fq2) -> Fq2 {
        let f = self.fp;
        let norm = f.add(&f.sqr(&a.re), &f.sqr(&a.im));
        let n_inv = f.inv(&norm);
        Fq2 { re: f.mont_mul(&a.re, &n_inv), im: f.neg(&f.mont_mul(&a.im, &n_inv)) }
    }

    pub fn pow(&self, a: &Fq2, e: &[u64]) -> Fq2 {
        let mut acc = self.one();
        let mut started = false;
        for &limb in e.iter().rev() {
            for bit in (0..64).rev() {
                if started {
                    acc = self.sqr(&acc);
                }
                if (limb >> bit) & 1 == 1 {
                    if started {
                        acc = self.mul(&acc, a);
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
            self.one()
        }
    }
}
