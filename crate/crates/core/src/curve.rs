//! Integer Weierstrass models, reduction modulo p, and the elliptic curve
//! group law over F_p.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::arith::{inv_mod, legendre, mul_mod, sqrt_mod};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CurveError {
    #[error("singular model: discriminant is zero")]
    SingularCurve,
    #[error("discriminant does not fit in 63 bits")]
    DiscriminantOverflow,
    #[error("bad reduction at p = {0}: p divides the discriminant")]
    BadReduction(u64),
    #[error("point sampling exhausted its trial budget")]
    Exhausted,
}

/// A nonsingular integral model y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeierstrassCurve {
    pub a1: i64,
    pub a2: i64,
    pub a3: i64,
    pub a4: i64,
    pub a6: i64,
    pub b2: i128,
    pub b4: i128,
    pub b6: i128,
    pub b8: i128,
    pub delta: i64,
}

impl WeierstrassCurve {
    pub fn new(a1: i64, a2: i64, a3: i64, a4: i64, a6: i64) -> Result<Self, CurveError> {
        // Checked throughout: extreme coefficients must surface as an error,
        // not as a silently wrapped discriminant.
        let invariants = || -> Option<(i128, i128, i128, i128, i128)> {
            let (a1, a2, a3, a4, a6) = (a1 as i128, a2 as i128, a3 as i128, a4 as i128, a6 as i128);
            let b2 = a1.checked_mul(a1)?.checked_add(4 * a2)?;
            let b4 = a1.checked_mul(a3)?.checked_add(2 * a4)?;
            let b6 = a3.checked_mul(a3)?.checked_add(4 * a6)?;
            let b8 = a1
                .checked_mul(a1)?
                .checked_mul(a6)?
                .checked_add(a2.checked_mul(a6)?.checked_mul(4)?)?
                .checked_sub(a1.checked_mul(a3)?.checked_mul(a4)?)?
                .checked_add(a2.checked_mul(a3)?.checked_mul(a3)?)?
                .checked_sub(a4.checked_mul(a4)?)?;
            let delta = b2
                .checked_mul(b2)?
                .checked_mul(b8)?
                .checked_neg()?
                .checked_sub(b4.checked_mul(b4)?.checked_mul(b4)?.checked_mul(8)?)?
                .checked_sub(b6.checked_mul(b6)?.checked_mul(27)?)?
                .checked_add(b2.checked_mul(b4)?.checked_mul(b6)?.checked_mul(9)?)?;
            Some((b2, b4, b6, b8, delta))
        };
        let (b2, b4, b6, b8, delta) = invariants().ok_or(CurveError::DiscriminantOverflow)?;
        // Standard identity, checked modulo 2^128 so it cannot itself overflow.
        debug_assert_eq!(
            b8.wrapping_mul(4),
            b2.wrapping_mul(b6).wrapping_sub(b4.wrapping_mul(b4))
        );
        if delta == 0 {
            return Err(CurveError::SingularCurve);
        }
        let delta = i64::try_from(delta).map_err(|_| CurveError::DiscriminantOverflow)?;
        Ok(WeierstrassCurve {
            a1,
            a2,
            a3,
            a4,
            a6,
            b2,
            b4,
            b6,
            b8,
            delta,
        })
    }

    /// Parse the "a1,a2,a3,a4,a6" input format.
    pub fn parse(s: &str) -> Result<Self, String> {
        let coeffs: Vec<i64> = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|e| format!("bad coefficient {t:?}: {e}"))
            })
            .collect::<Result<_, _>>()?;
        if coeffs.len() != 5 {
            return Err(format!(
                "expected 5 coefficients a1,a2,a3,a4,a6, got {}",
                coeffs.len()
            ));
        }
        WeierstrassCurve::new(coeffs[0], coeffs[1], coeffs[2], coeffs[3], coeffs[4])
            .map_err(|e| e.to_string())
    }

    pub fn coefficients(&self) -> [i64; 5] {
        [self.a1, self.a2, self.a3, self.a4, self.a6]
    }

    pub fn has_good_reduction(&self, p: u64) -> bool {
        !self.delta.unsigned_abs().is_multiple_of(p)
    }

    /// Reduce modulo a prime of good reduction. For p > 3 the model is
    /// brought to short form y^2 = x^3 + Ax + B; for p = 2, 3 the general
    /// coefficients are kept and points are handled by enumeration.
    pub fn reduce_mod_p(&self, p: u64) -> Result<ReducedCurve, CurveError> {
        if !self.has_good_reduction(p) {
            return Err(CurveError::BadReduction(p));
        }
        let m = p as i128;
        if p <= 3 {
            return Ok(ReducedCurve::General {
                p,
                a1: self.a1.rem_euclid(p as i64) as u64,
                a2: self.a2.rem_euclid(p as i64) as u64,
                a3: self.a3.rem_euclid(p as i64) as u64,
                a4: self.a4.rem_euclid(p as i64) as u64,
                a6: self.a6.rem_euclid(p as i64) as u64,
            });
        }
        // c-invariants give the isomorphic model y^2 = x^3 - 27 c4 x - 54 c6;
        // everything is computed mod p so no width is ever exceeded.
        let b2 = self.b2.rem_euclid(m) as u64;
        let b4 = self.b4.rem_euclid(m) as u64;
        let b6 = self.b6.rem_euclid(m) as u64;
        let c4 = (mul_mod(b2, b2, p) + p - mul_mod(24 % p, b4, p)) % p;
        let c6 = (mul_mod(36 % p, mul_mod(b2, b4, p), p) + 2 * p
            - mul_mod(mul_mod(b2, b2, p), b2, p)
            - mul_mod(216 % p, b6, p))
            % p;
        let a = mul_mod((p - 27 % p) % p, c4, p);
        let b = mul_mod((p - 54 % p) % p, c6, p);
        let short = ReducedCurve::Short { p, a, b };
        debug_assert!(short.short_discriminant_nonzero());
        Ok(short)
    }
}

/// A curve over F_p with good reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReducedCurve {
    /// y^2 = x^3 + ax + b over F_p, p > 3.
    Short { p: u64, a: u64, b: u64 },
    /// Full five-coefficient model, used only for p = 2, 3.
    General {
        p: u64,
        a1: u64,
        a2: u64,
        a3: u64,
        a4: u64,
        a6: u64,
    },
}

/// A point of E(F_p): the identity or an affine pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurvePoint {
    Infinity,
    Affine(u64, u64),
}

impl ReducedCurve {
    pub fn p(&self) -> u64 {
        match *self {
            ReducedCurve::Short { p, .. } | ReducedCurve::General { p, .. } => p,
        }
    }

    /// The five coefficients (a1, a2, a3, a4, a6) mod p.
    fn coeffs(&self) -> (u64, u64, u64, u64, u64) {
        match *self {
            ReducedCurve::Short { a, b, .. } => (0, 0, 0, a, b),
            ReducedCurve::General {
                a1, a2, a3, a4, a6, ..
            } => (a1, a2, a3, a4, a6),
        }
    }

    fn short_discriminant_nonzero(&self) -> bool {
        match *self {
            ReducedCurve::Short { p, a, b } => {
                // -16 (4a^3 + 27b^2)
                let a3 = mul_mod(mul_mod(a, a, p), a, p);
                let b2 = mul_mod(b, b, p);
                !(mul_mod(4 % p, a3, p) + mul_mod(27 % p, b2, p)).is_multiple_of(p)
            }
            ReducedCurve::General { .. } => true,
        }
    }

    pub fn is_on_curve(&self, pt: CurvePoint) -> bool {
        let (x, y) = match pt {
            CurvePoint::Infinity => return true,
            CurvePoint::Affine(x, y) => (x, y),
        };
        let p = self.p();
        let (a1, a2, a3, a4, a6) = self.coeffs();
        let lhs = (mul_mod(y, y, p) + mul_mod(a1, mul_mod(x, y, p), p) + mul_mod(a3, y, p)) % p;
        let x2 = mul_mod(x, x, p);
        let rhs = (mul_mod(x2, x, p) + mul_mod(a2, x2, p) + mul_mod(a4, x, p) + a6) % p;
        lhs == rhs
    }

    pub fn negate(&self, pt: CurvePoint) -> CurvePoint {
        match pt {
            CurvePoint::Infinity => CurvePoint::Infinity,
            CurvePoint::Affine(x, y) => {
                let p = self.p();
                let (a1, _, a3, _, _) = self.coeffs();
                let ny = (2 * p - y - (mul_mod(a1, x, p) + a3) % p) % p;
                CurvePoint::Affine(x, ny)
            }
        }
    }

    /// Chord-tangent addition. Valid in every characteristic.
    pub fn add(&self, lhs: CurvePoint, rhs: CurvePoint) -> CurvePoint {
        let p = self.p();
        let (a1, a2, a3, a4, a6) = self.coeffs();
        let (x1, y1) = match lhs {
            CurvePoint::Infinity => return rhs,
            CurvePoint::Affine(x, y) => (x, y),
        };
        let (x2, y2) = match rhs {
            CurvePoint::Infinity => return lhs,
            CurvePoint::Affine(x, y) => (x, y),
        };
        if self.negate(lhs) == rhs {
            return CurvePoint::Infinity;
        }
        // Slope lambda and intercept nu of the chord/tangent line.
        let (lambda, nu) = if x1 != x2 {
            let dx_inv = inv_mod((x2 + p - x1) % p, p).expect("x1 != x2");
            let lambda = mul_mod((y2 + p - y1) % p, dx_inv, p);
            let nu = mul_mod((mul_mod(y1, x2, p) + p - mul_mod(y2, x1, p)) % p, dx_inv, p);
            (lambda, nu)
        } else {
            let denom = (2 * y1 % p + mul_mod(a1, x1, p) + a3) % p;
            let d_inv = inv_mod(denom, p).expect("not a 2-torsion point");
            let x1sq = mul_mod(x1, x1, p);
            let num_l =
                (3 * x1sq % p + 2 * mul_mod(a2, x1, p) % p + a4 + p - mul_mod(a1, y1, p)) % p;
            let num_n = (mul_mod(x1sq, (p - x1 % p) % p, p) + mul_mod(a4, x1, p) + 2 * a6 % p + p
                - mul_mod(a3, y1, p))
                % p;
            (mul_mod(num_l, d_inv, p), mul_mod(num_n, d_inv, p))
        };
        let x3 =
            (mul_mod(lambda, lambda, p) + mul_mod(a1, lambda, p) + 3 * p - a2 % p - x1 - x2) % p;
        let y3 = (2 * p + p - mul_mod((lambda + a1) % p, x3, p) % p - nu - a3) % p;
        CurvePoint::Affine(x3, y3)
    }

    /// k * P by double-and-add.
    pub fn scalar_mul(&self, k: u64, pt: CurvePoint) -> CurvePoint {
        let mut acc = CurvePoint::Infinity;
        let mut base = pt;
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(acc, base);
            }
            base = self.add(base, base);
            k >>= 1;
        }
        acc
    }

    /// All points, by scanning x and y. Only sensible for small p.
    pub fn enumerate_points(&self) -> Vec<CurvePoint> {
        let p = self.p();
        let mut pts = vec![CurvePoint::Infinity];
        for x in 0..p {
            for y in 0..p {
                let pt = CurvePoint::Affine(x, y);
                if self.is_on_curve(pt) {
                    pts.push(pt);
                }
            }
        }
        pts
    }

    /// Deterministic random point for p > 3: sample x from a seeded stream
    /// until x^3 + ax + b is a square, take the smaller square root.
    pub fn random_point(&self, seed: u64) -> Result<CurvePoint, CurveError> {
        let (p, a, b) = match *self {
            ReducedCurve::Short { p, a, b } => (p, a, b),
            ReducedCurve::General { .. } => panic!("random_point requires p > 3"),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let max_trials = 10u128 * p as u128;
        let mut trials = 0u128;
        while trials < max_trials {
            trials += 1;
            let x = rng.gen_range(0..p);
            let rhs = (mul_mod(mul_mod(x, x, p), x, p) + mul_mod(a, x, p) + b) % p;
            if rhs == 0 {
                return Ok(CurvePoint::Affine(x, 0));
            }
            if legendre(rhs as i64, p) == 1 {
                let y = sqrt_mod(rhs, p).expect("residue");
                return Ok(CurvePoint::Affine(x, y));
            }
        }
        Err(CurveError::Exhausted)
    }
}
