//! The supersingular curve y^2 = x^3 + x over F_q (q = 3 mod 4), with
//! Jacobian-coordinate arithmetic for inversion-free chains and batch
//! conversion back to affine.

use super::fp::{self, FieldCtx, Fp};
use rand::RngCore;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Affine {
    Infinity,
    Point { x: Fp, y: Fp },
}

#[derive(Debug, Clone, Copy)]
pub struct Jacobian {
    x: Fp,
    y: Fp,
    /// Zero encodes the point at infinity.
    z: Fp,
}

pub struct CurveCtx<'a> {
    pub fp: &'a FieldCtx,
}

impl<'a> CurveCtx<'a> {
    pub fn new(fp: &'a FieldCtx) -> Self {
        CurveCtx { fp }
    }

    pub fn infinity(&self) -> Jacobian {
        Jacobian { x: self.fp.one, y: self.fp.one, z: fp::ZERO }
    }

    pub fn to_jacobian(&self, p: &Affine) -> Jacobian {
        match p {
            Affine::Infinity => self.infinity(),
            Affine::Point { x, y } => Jacobian { x: *x, y: *y, z: self.fp.one },
        }
    }

    pub fn is_on_curve(&self, p: &Affine) -> bool {
        match p {
            Affine::Infinity => true,
            Affine::Point { x, y } => {
                let f = self.fp;
                let rhs = f.add(&f.mont_mul(&f.sqr(x), x), x);
                f.sqr(y) == rhs
            }
        }
    }

    pub fn neg(&self, p: &Affine) -> Affine {
        match p {
            Affine::Infinity => Affine::Infinity,
            Affine::Point { x, y } => Affine::Point { x: *x, y: self.fp.neg(y) },
        }
    }

    pub fn double(&self, p: &Jacobian) -> Jacobian {
        let f = self.fp;
        if p.z == fp::ZERO || p.y == fp::ZERO {
            return self.infinity();
        }
        let xx = f.sqr(&p.x);
        let yy = f.sqr(&p.y);
        let yyyy = f.sqr(&yy);
        let zz = f.sqr(&p.z);
        let s = f.double(&f.sub(&f.sub(&f.sqr(&f.add(&p.x, &yy)), &xx), &yyyy));
        // With the curve coefficient a = 1: M = 3*XX + ZZ^2.
        let m = f.add(&f.add(&f.double(&xx), &xx), &f.sqr(&zz));
        let x3 = f.sub(&f.sqr(&m), &f.double(&s));
        let y3 = f.sub(
            &f.mont_mul(&m, &f.sub(&s, &x3)),
            &f.double(&f.double(&f.double(&yyyy))),
        );
        let z3 = f.sub(&f.sub(&f.sqr(&f.add(&p.y, &p.z)), &yy), &zz);
        Jacobian { x: x3, y: y3, z: z3 }
    }

    pub fn add(&self, p: &Jacobian, q: &Jacobian) -> Jacobian {
        let f = self.fp;
        if p.z == fp::ZERO {
            return *q;
        }
        if q.z == fp::ZERO {
            return *p;
        }
        let z1z1 = f.sqr(&p.z);
        let z2z2 = f.sqr(&q.z);
        let u1 = f.mont_mul(&p.x, &z2z2);
        let u2 = f.mont_mul(&q.x, &z1z1);
        let s1 = f.mont_mul(&f.mont_mul(&p.y, &q.z), &z2z2);
        let s2 = f.mont_mul(&f.mont_mul(&q.y, &p.z), &z1z1);
        if u1 == u2 {
            return if s1 == s2 { self.double(p) } else { self.infinity() };
        }
        let h = f.sub(&u2, &u1);
        let i = f.sqr(&f.double(&h));
        let j = f.mont_mul(&h, &i);
        let r = f.double(&f.sub(&s2, &s1));
        let v = f.mont_mul(&u1, &i);
        let x3 = f.sub(&f.sub(&f.sqr(&r), &j), &f.double(&v));
        let y3 = f.sub(
            &f.mont_mul(&r, &f.sub(&v, &x3)),
            &f.double(&f.mont_mul(&s1, &j)),
        );
        let z3 = f.mont_mul(&f.sub(&f.sub(&f.sqr(&f.add(&p.z, &q.z)), &z1z1), &z2z2), &h);
        Jacobian { x: x3, y: y3, z: z3 }
    }

    /// Scalar multiple for a little-endian limb scalar, most significant
    /// bit first.
    pub fn scalar_mul(&self, p: &Affine, e: &[u64]) -> Jacobian {
        let base = self.to_jacobian(p);
        let mut acc = self.infinity();
        let mut started = false;
        for &limb in e.iter().rev() {
            for bit in (0..64).rev() {
                if started {
                    acc = self.double(&acc);
                }
                if (limb >> bit) & 1 == 1 {
                    if started {
                        acc = self.add(&acc, &base);
                    } else {
                        acc = base;
                        started = true;
                    }
                }
            }
        }
        acc
    }

    pub fn to_affine(&self, p: &Jacobian) -> Affine {
        let f = self.fp;
        if p.z == fp::ZERO {
            return Affine::Infinity;
        }
        let z_inv = f.inv(&p.z);
        let z2 = f.sqr(&z_inv);
        let z3 = f.mont_mul(&z2, &z_inv);
        Affine::Point { x: f.mont_mul(&p.x, &z2), y: f.mont_mul(&p.y, &z3) }
    }

    /// Convert many Jacobian points with a single field inversion.
    pub fn batch_to_affine(&self, points: &[Jacobian]) -> Vec<Affine> {
        let f = self.fp;
        let mut zs: Vec<Fp> = points.iter().map(|p| p.z).collect();
        f.batch_inv(&mut zs);
        points
            .iter()
            .zip(&zs)
            .map(|(p, z_inv)| {
                if p.z == fp::ZERO {
                    Affine::Infinity
                } else {
                    let z2 = f.sqr(z_inv);
                    let z3 = f.mont_mul(&z2, z_inv);
                    Affine::Point { x: f.mont_mul(&p.x, &z2), y: f.mont_mul(&p.y, &z3) }
                }
            })
            .collect()
    }

    /// A uniformly random curve point (never the point at infinity).
    pub fn random_point(&self, rng: &mut (impl RngCore + ?Sized)) -> Affine {
        let f = self.fp;
        loop {
            let mut raw = fp::ZERO;
            for limb in raw.iter_mut() {
                *limb = rng.next_u64();
            }
            // Cheap rejection sampling: clear bits above the modulus width.
            let top = (0..fp::LIMBS).rev().find(|&i| f.modulus[i] != 0).unwrap();
            for limb in raw.iter_mut().skip(top + 1) {
                *limb = 0;
            }
            let mod_bits = 64 - f.modulus[top].leading_zeros();
            if mod_bits < 64 {
                raw[top] &= (1u64 << mod_bits) - 1;
            }
            if !fp::limbs_less(&raw, &f.modulus) {
                continue;
            }
            let x = f.to_mont(&raw);
            let rhs = f.add(&f.mont_mul(&f.sqr(&x), &x), &x);
            if let Some(y) = f.sqrt(&rhs) {
                if y == fp::ZERO && x == fp::ZERO {
                    continue;
                }
                return Affine::Point { x, y };
            }
        }
    }

    /// 81-byte encoding: flag byte, then canonical x and y.
    pub fn point_to_bytes(&self, p: &Affine) -> [u8; 81] {
        let mut out = [0u8; 81];
        if let Affine::Point { x, y } = p {
            out[0] = 1;
            out[1..41].copy_from_slice(&fp::limbs_to_bytes(&self.fp.from_mont(x)));
            out[41..81].copy_from_slice(&fp::limbs_to_bytes(&self.fp.from_mont(y)));
        }
        out
    }

    /// Strict decode: reduced coordinates, on the curve, canonical infinity.
    pub fn point_from_bytes(&self, bytes: &[u8]) -> Option<Affine> {
        if bytes.len() != 81 {
            return None;
        }
        match bytes[0] {
            0 => bytes[1..].iter().all(|&b| b == 0).then_some(Affine::Infinity),
            1 => {
                let x = fp::limbs_from_bytes(&bytes[1..41])?;
                let y = fp::limbs_from_bytes(&bytes[41..81])?;
                if !fp::limbs_less(&x, &self.fp.modulus) || !fp::limbs_less(&y, &self.fp.modulus)
                {
                    return None;
                }
                let p = Affine::Point { x: self.fp.to_mont(&x), y: self.fp.to_mont(&y) };
                self.is_on_curve(&p).then_some(p)
            }
            _ => None,
        }
    }
}
