//! Exact rational arithmetic on i128, always stored reduced with a positive
//! denominator. All density constants in this crate are exact rationals;
//! floating point only appears when a caller explicitly converts.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::Serialize;

fn gcd_i128(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// A reduced fraction num/den with den > 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Rational {
    num: i128,
    den: i128,
}

impl Rational {
    pub const ZERO: Rational = Rational { num: 0, den: 1 };
    pub const ONE: Rational = Rational { num: 1, den: 1 };

    /// Build num/den, reducing and normalizing the sign. Panics on den = 0.
    pub fn new(num: i128, den: i128) -> Rational {
        assert!(den != 0, "zero denominator");
        let g = gcd_i128(num, den);
        let (mut num, mut den) = (num / g, den / g);
        if den < 0 {
            num = -num;
            den = -den;
        }
        Rational { num, den }
    }

    pub fn from_integer(n: i128) -> Rational {
        Rational { num: n, den: 1 }
    }

    pub fn numerator(&self) -> i128 {
        self.num
    }

    pub fn denominator(&self) -> i128 {
        self.den
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Multiply with overflow detection, cross-reducing first so only
    /// genuinely out-of-range results fail.
    pub fn checked_mul(&self, rhs: &Rational) -> Option<Rational> {
        let g1 = gcd_i128(self.num, rhs.den);
        let g2 = gcd_i128(rhs.num, self.den);
        let num = (self.num / g1).checked_mul(rhs.num / g2)?;
        let den = (self.den / g2).checked_mul(rhs.den / g1)?;
        Some(Rational { num, den })
    }

    pub fn checked_add(&self, rhs: &Rational) -> Option<Rational> {
        let g = gcd_i128(self.den, rhs.den);
        let lhs_scale = rhs.den / g;
        let rhs_scale = self.den / g;
        let num = self
            .num
            .checked_mul(lhs_scale)?
            .checked_add(rhs.num.checked_mul(rhs_scale)?)?;
        let den = self.den.checked_mul(lhs_scale)?;
        Some(Rational::new(num, den))
    }
}

impl Add for Rational {
    type Output = Rational;
    fn add(self, rhs: Rational) -> Rational {
        self.checked_add(&rhs).expect("rational overflow in add")
    }
}

impl Sub for Rational {
    type Output = Rational;
    fn sub(self, rhs: Rational) -> Rational {
        self + (-rhs)
    }
}

impl Mul for Rational {
    type Output = Rational;
    fn mul(self, rhs: Rational) -> Rational {
        self.checked_mul(&rhs).expect("rational overflow in mul")
    }
}

impl Div for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        assert!(rhs.num != 0, "division by zero rational");
        self * Rational::new(rhs.den, rhs.num)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational {
            num: -self.num,
            den: self.den,
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Rational) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Rational) -> std::cmp::Ordering {
        // Denominators are positive, so cross-multiplication preserves order.
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Rational {
        Rational::from_integer(n as i128)
    }
}

impl From<u64> for Rational {
    fn from(n: u64) -> Rational {
        Rational::from_integer(n as i128)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reduction_and_sign() {
        assert_eq!(Rational::new(6, -8), Rational::new(-3, 4));
        assert_eq!(Rational::new(-6, -8), Rational::new(3, 4));
        assert_eq!(Rational::new(0, 5), Rational::ZERO);
        assert_eq!(Rational::new(13, 48).to_string(), "13/48");
        assert_eq!(Rational::from_integer(7).to_string(), "7");
    }

    #[test]
    fn arithmetic_basics() {
        let a = Rational::new(1, 3);
        let b = Rational::new(13, 16);
        assert_eq!(a * b, Rational::new(13, 48));
        assert_eq!(Rational::ONE - Rational::new(2, 3), a);
        assert_eq!(
            Rational::new(5, 24) / Rational::new(13, 48),
            Rational::new(10, 13)
        );
        assert!(Rational::new(5, 24) < Rational::new(13, 48));
    }

    #[test]
    fn checked_mul_overflow_is_detected() {
        let huge = Rational::new(i128::MAX / 2, 1);
        assert!(huge.checked_mul(&Rational::from_integer(4)).is_none());
        assert!(huge.checked_mul(&Rational::new(1, 4)).is_some());
    }

    #[test]
    fn serializes_as_num_den_pair() {
        let v = serde_json::to_value(Rational::new(5, 24)).unwrap();
        assert_eq!(v["num"], 5);
        assert_eq!(v["den"], 24);
    }

    proptest! {
        #[test]
        fn stored_form_is_canonical(n in -10_000i128..10_000, d in 1i128..10_000) {
            let r = Rational::new(n, d);
            prop_assert!(r.denominator() > 0);
            prop_assert_eq!(gcd_i128(r.numerator(), r.denominator()), if r.numerator() == 0 { r.denominator() } else { 1 });
        }

        #[test]
        fn field_laws_on_small_operands(
            a in -500i128..500, b in 1i128..60,
            c in -500i128..500, d in 1i128..60,
            e in -500i128..500, f in 1i128..60,
        ) {
            let x = Rational::new(a, b);
            let y = Rational::new(c, d);
            let z = Rational::new(e, f);
            prop_assert_eq!(x + y, y + x);
            prop_assert_eq!(x * y, y * x);
            prop_assert_eq!((x + y) + z, x + (y + z));
            prop_assert_eq!(x * (y + z), x * y + x * z);
        }
    }
}
