//! Tate pairing on y^2 = x^3 + x via Miller's algorithm, composed with the
//! distortion map (x, y) -> (-x, iy) into F_q^2.
//!
//! A chain is precomputed per base point: the doubling/addition trajectory
//! is normalized to affine with one batched inversion, and every line is
//! stored as the coefficient pair (a, b) of `a*xq + b + i*yq`, the line
//! evaluated at the distorted image of a point (xq, yq). Vertical lines are
//! dropped: their values at distorted points lie in the base field, which
//! the final exponentiation by (q - 1)*cofactor annihilates. The same
//! argument lets every line touching the point at infinity contribute a
//! factor of one, so chains stay correct for bases whose order is a proper
//! divisor of the pairing order.

use super::curve::{Affine, CurveCtx, Jacobian};
use super::fp::{self, FieldCtx, Fp};
use super::fq2::{ExtCtx, Fq2};

#[derive(Debug, Clone, PartialEq, Eq)]
enum StepKind {
    Double,
    Add,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Step {
    kind: StepKind,
    /// Line coefficients, or `None` when the factor collapses to one.
    line: Option<(Fp, Fp)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MillerChain {
    steps: Vec<Step>,
}

/// Scalars are little-endian limb slices; this walks their bits from the
/// most significant set bit downward.
fn significant_bits(e: &[u64]) -> Option<impl Iterator<Item = bool> + '_> {
    let top = e.iter().rposition(|&l| l != 0)?;
    let lead = 63 - e[top].leading_zeros() as usize;
    let total = top * 64 + lead;
    Some((0..total).rev().map(move |i| (e[i / 64] >> (i % 64)) & 1 == 1))
}

impl MillerChain {
    /// Precompute the Miller trajectory of `order` on `base`.
    pub fn build(fctx: &FieldCtx, base: &Affine, order: &[u64]) -> MillerChain {
        let curve = CurveCtx::new(fctx);
        let (base_x, base_y) = match base {
            // The empty chain evaluates to one everywhere, matching
            // f_{n, O} up to base-field factors.
            Affine::Infinity => return MillerChain { steps: Vec::new() },
            Affine::Point { x, y } => (*x, *y),
        };
        let Some(bits) = significant_bits(order) else {
            return MillerChain { steps: Vec::new() };
        };

        // Pass 1: record the point entering each step of the trajectory.
        let base_jac = curve.to_jacobian(base);
        let mut trajectory: Vec<(StepKind, Jacobian)> = Vec::new();
        let mut r = base_jac;
        for bit in bits {
            trajectory.push((StepKind::Double, r));
            r = curve.double(&r);
            if bit {
                trajectory.push((StepKind::Add, r));
                r = curve.add(&r, &base_jac);
            }
        }

        // Pass 2: normalize the whole trajectory with one inversion.
        let points: Vec<Jacobian> = trajectory.iter().map(|(_, p)| *p).collect();
        let affine = curve.batch_to_affine(&points);

        // Pass 3: slope numerators and denominators, inverted in one batch.
        let f = fctx;
        let mut numer = vec![fp::ZERO; affine.len()];
        let mut denom = vec![fp::ZERO; affine.len()];
        for (i, ((kind, _), at)) in trajectory.iter().zip(&affine).enumerate() {
            let Affine::Point { x, y } = at else { continue };
            match kind {
                StepKind::Double => {
                    if *y == fp::ZERO {
                        continue; // vertical tangent at a 2-torsion point
                    }
                    let xx = f.sqr(x);
                    numer[i] = f.add(&f.add(&f.double(&xx), &xx), &f.one);
                    denom[i] = f.double(y);
                }
                StepKind::Add => {
                    if *x == base_x {
                        if *y == base_y && *y != fp::ZERO {
                            // Chord degenerates to the tangent at the base.
                            let xx = f.sqr(x);
                            numer[i] = f.add(&f.add(&f.double(&xx), &xx), &f.one);
                            denom[i] = f.double(y);
                        }
                        continue; // else vertical: R = -base
                    }
                    numer[i] = f.sub(y, &base_y);
                    denom[i] = f.sub(x, &base_x);
                }
            }
        }
        let mut inverses = denom.clone();
        f.batch_inv(&mut inverses);

        // Pass 4: assemble `l(xq, yq) = a*xq + b + i*yq` per surviving line,
        // from `l = lambda*(xq + x_r) - y_r + i*yq` at the recorded point.
        let steps = trajectory
            .iter()
            .zip(&affine)
            .enumerate()
            .map(|(i, ((kind, _), at))| {
                let line = match at {
                    Affine::Point { x, y } if denom[i] != fp::ZERO => {
                        let lambda = f.mont_mul(&numer[i], &inverses[i]);
                        let b = f.sub(&f.mont_mul(&lambda, x), y);
                        Some((lambda, b))
                    }
                    _ => None,
                };
                Step { kind: kind.clone(), line }
            })
            .collect();
        MillerChain { steps }
    }

    /// Evaluate the chain at the distorted image of `q`, without the final
    /// exponentiation. Returns one when `q` is the point at infinity.
    pub fn eval(&self, fctx: &FieldCtx, q: &Affine) -> Fq2 {
        let ext = ExtCtx::new(fctx);
        let Affine::Point { x: xq, y: yq } = q else {
            return ext.one();
        };
        let mut acc = ext.one();
        for step in &self.steps {
            if step.kind == StepKind::Double {
                acc = ext.sqr(&acc);
            }
            if let Some((a, b)) = &step.line {
                let line = Fq2::new(fctx.add(&fctx.mont_mul(a, xq), b), *yq);
                acc = ext.mul(&acc, &line);
            }
        }
        acc
    }
}

/// Map a raw Miller value into the order-n subgroup: z^((q^2 - 1) / n),
/// computed as (conj(z) * z^-1)^cofactor since q^2 - 1 = (q - 1)(q + 1)
/// and conjugation is the q-power Frobenius.
pub fn final_exponentiation(fctx: &FieldCtx, cofactor: &[u64], z: &Fq2) -> Fq2 {
    let ext = ExtCtx::new(fctx);
    let unit = ext.mul(&ext.conj(z), &ext.inv(z));
    ext.pow(&unit, cofactor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    /// Toy parameters: q1 = 5, q2 = 7, n = 35, cofactor = 4, q = 139.
    struct Toy {
        fctx: FieldCtx,
    }

    impl Toy {
        fn new() -> Toy {
            Toy { fctx: FieldCtx::new([139, 0, 0, 0, 0]) }
        }

        fn order_n_point(&self, rng: &mut ChaCha20Rng) -> Affine {
            let curve = CurveCtx::new(&self.fctx);
            loop {
                let p = curve.random_point(rng);
                let g = curve.to_affine(&curve.scalar_mul(&p, &[4]));
                let has_full_order = g != Affine::Infinity
                    && curve.to_affine(&curve.scalar_mul(&g, &[5])) != Affine::Infinity
                    && curve.to_affine(&curve.scalar_mul(&g, &[7])) != Affine::Infinity;
                if has_full_order {
                    return g;
                }
            }
        }

        fn pair(&self, p: &Affine, q: &Affine) -> Fq2 {
            let chain = MillerChain::build(&self.fctx, p, &[35]);
            final_exponentiation(&self.fctx, &[4], &chain.eval(&self.fctx, q))
        }
    }

    #[test]
    fn pairing_is_bilinear_and_nondegenerate() {
        let toy = Toy::new();
        let ext = ExtCtx::new(&toy.fctx);
        let curve = CurveCtx::new(&toy.fctx);
        let mut rng = ChaCha20Rng::seed_from_u64(200);
        let g = toy.order_n_point(&mut rng);
        let e_gg = toy.pair(&g, &g);
        // e(g, g) generates the order-35 subgroup.
        assert_ne!(e_gg, ext.one());
        assert_ne!(ext.pow(&e_gg, &[5]), ext.one());
        assert_ne!(ext.pow(&e_gg, &[7]), ext.one());
        assert_eq!(ext.pow(&e_gg, &[35]), ext.one());

        let mut checked = 0;
        while checked < 12 {
            let a = rng.gen_range(1u64..35);
            let b = rng.gen_range(1u64..35);
            let pa = curve.to_affine(&curve.scalar_mul(&g, &[a]));
            let pb = curve.to_affine(&curve.scalar_mul(&g, &[b]));
            let lhs = toy.pair(&pa, &pb);
            if lhs.is_zero() {
                // The distorted image of pb hit a line of pa's tiny toy
                // trajectory; such collisions vanish at real sizes.
                continue;
            }
            assert_eq!(lhs, ext.pow(&e_gg, &[a * b % 35]), "a = {a}, b = {b}");
            checked += 1;
        }
    }

    #[test]
    fn pairing_handles_degenerate_inputs() {
        let toy = Toy::new();
        let ext = ExtCtx::new(&toy.fctx);
        let curve = CurveCtx::new(&toy.fctx);
        let mut rng = ChaCha20Rng::seed_from_u64(201);
        let g = toy.order_n_point(&mut rng);
        // Either side at infinity gives the unit value.
        assert_eq!(toy.pair(&Affine::Infinity, &g), ext.one());
        assert_eq!(toy.pair(&g, &Affine::Infinity), ext.one());
        // Bases of order 5 and 7 (proper divisors of 35) still pair
        // bilinearly: the trajectory passes through infinity mid-chain.
        let p5 = curve.to_affine(&curve.scalar_mul(&g, &[7]));
        let p7 = curve.to_affine(&curve.scalar_mul(&g, &[5]));
        let e_5g = toy.pair(&p5, &g);
        let e_g5 = toy.pair(&g, &p5);
        assert_eq!(ext.pow(&e_5g, &[5]), ext.one());
        assert_ne!(e_5g, ext.one());
        assert_eq!(ext.pow(&e_g5, &[5]), ext.one());
        let e_57 = toy.pair(&p5, &p7);
        // e(7g, 5g) = e(g, g)^35 = 1.
        assert_eq!(e_57, ext.one());
    }

    #[test]
    fn pairing_is_compatible_with_scalars_across_sides() {
        let toy = Toy::new();
        let curve = CurveCtx::new(&toy.fctx);
        let mut rng = ChaCha20Rng::seed_from_u64(202);
        let g = toy.order_n_point(&mut rng);
        for k in [2u64, 3, 11, 16] {
            let kg = curve.to_affine(&curve.scalar_mul(&g, &[k]));
            let left = toy.pair(&kg, &g);
            let right = toy.pair(&g, &kg);
            if left.is_zero() || right.is_zero() {
                continue;
            }
            assert_eq!(left, right, "k = {k}");
        }
    }
}
