//! Exact combinatorics of GL2(F_l) for small l: full enumeration, the sign
//! character at l = 2, the unipotent class (determinant 1, eigenvalue 1),
//! conjugacy counts for T = [[1,1],[0,1]], and the character sums that feed
//! the entanglement correction.

use thiserror::Error;

use crate::arith::{inv_mod, legendre};

/// Largest modulus for which exhaustive enumeration is used
/// (|GL2(F_13)| = 26208).
pub const MAX_ENUM_ELL: u64 = 13;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Gl2Error {
    #[error(
        "brute-force count {brute} disagrees with closed form {closed} for {what} at ell={ell}"
    )]
    MismatchedCount {
        what: &'static str,
        ell: u64,
        brute: u64,
        closed: u64,
    },
}

/// An invertible 2x2 matrix [[a, b], [c, d]] over F_ell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mat2 {
    pub ell: u64,
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl Mat2 {
    pub fn new(ell: u64, a: u64, b: u64, c: u64, d: u64) -> Mat2 {
        Mat2 {
            ell,
            a: a % ell,
            b: b % ell,
            c: c % ell,
            d: d % ell,
        }
    }

    pub fn identity(ell: u64) -> Mat2 {
        Mat2::new(ell, 1, 0, 0, 1)
    }

    /// The representative T = [[1,1],[0,1]] of the non-identity unipotent class.
    pub fn unipotent_rep(ell: u64) -> Mat2 {
        Mat2::new(ell, 1, 1, 0, 1)
    }

    pub fn det(&self) -> u64 {
        let l = self.ell;
        (self.a * self.d % l + l - self.b * self.c % l) % l
    }

    pub fn trace(&self) -> u64 {
        (self.a + self.d) % self.ell
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        debug_assert_eq!(self.ell, rhs.ell);
        let l = self.ell;
        Mat2::new(
            l,
            self.a * rhs.a + self.b * rhs.c,
            self.a * rhs.b + self.b * rhs.d,
            self.c * rhs.a + self.d * rhs.c,
            self.c * rhs.b + self.d * rhs.d,
        )
    }

    pub fn inverse(&self) -> Mat2 {
        let l = self.ell;
        let det_inv = inv_mod(self.det(), l).expect("member of GL2");
        Mat2::new(
            l,
            self.d * det_inv,
            (l - self.b % l) % l * det_inv,
            (l - self.c % l) % l * det_inv,
            self.a * det_inv,
        )
    }

    /// G^{-1} * self * G.
    pub fn conjugate_by(&self, g: &Mat2) -> Mat2 {
        g.inverse().mul(self).mul(g)
    }
}

/// All of GL2(F_ell) by scanning the ell^4 entry tuples.
pub fn enumerate_gl2(ell: u64) -> Vec<Mat2> {
    assert!(
        ell <= MAX_ENUM_ELL && crate::arith::is_prime(ell),
        "enumeration supports prime ell <= {MAX_ENUM_ELL}"
    );
    let mut out = Vec::with_capacity(gl2_order(ell) as usize);
    for a in 0..ell {
        for b in 0..ell {
            for c in 0..ell {
                for d in 0..ell {
                    let m = Mat2 { ell, a, b, c, d };
                    if m.det() != 0 {
                        out.push(m);
                    }
                }
            }
        }
    }
    out
}

/// |GL2(F_ell)| = (ell^2 - 1)(ell^2 - ell).
pub fn gl2_order(ell: u64) -> u64 {
    (ell * ell - 1) * (ell * ell - ell)
}

/// Sign of the permutation a matrix over F_2 induces on the three nonzero
/// vectors of F_2^2.
pub fn sign_character(m: &Mat2) -> i32 {
    assert_eq!(m.ell, 2, "the sign character lives on GL2(F_2)");
    let vecs = [(0u64, 1u64), (1, 0), (1, 1)];
    let image = |&(x, y): &(u64, u64)| ((m.a * x + m.b * y) % 2, (m.c * x + m.d * y) % 2);
    let perm: Vec<usize> = vecs
        .iter()
        .map(|v| {
            let w = image(v);
            vecs.iter().position(|&u| u == w).expect("invertible")
        })
        .collect();
    let mut inversions = 0;
    for i in 0..3 {
        for j in (i + 1)..3 {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// True for the matrices with determinant 1 and eigenvalue 1, i.e. both
/// eigenvalues 1: the conjugates of upper unitriangular matrices. These are
/// exactly the local Frobenius shapes with ell | p - 1 and ell | #E(F_p).
pub fn is_unipotent(m: &Mat2) -> bool {
    m.det() == 1 % m.ell && m.trace() == 2 % m.ell
}

fn checked(what: &'static str, ell: u64, brute: u64, closed: u64) -> Result<u64, Gl2Error> {
    if brute == closed {
        Ok(brute)
    } else {
        Err(Gl2Error::MismatchedCount {
            what,
            ell,
            brute,
            closed,
        })
    }
}

/// Number of unipotent matrices; brute force checked against ell^2.
pub fn count_unipotent(ell: u64) -> Result<u64, Gl2Error> {
    let brute = enumerate_gl2(ell)
        .iter()
        .filter(|m| is_unipotent(m))
        .count() as u64;
    checked("unipotent count", ell, brute, ell * ell)
}

/// Order of the centralizer of T; brute force checked against ell^2 - ell.
pub fn centralizer_order_t(ell: u64) -> Result<u64, Gl2Error> {
    let t = Mat2::unipotent_rep(ell);
    let brute = enumerate_gl2(ell)
        .iter()
        .filter(|m| m.mul(&t) == t.mul(m))
        .count() as u64;
    checked("centralizer of T", ell, brute, ell * ell - ell)
}

/// Size of the conjugacy class of T, found by an explicit conjugation
/// search; checked against ell^2 - 1.
pub fn class_size_t(ell: u64) -> Result<u64, Gl2Error> {
    let t = Mat2::unipotent_rep(ell);
    let mut class = std::collections::HashSet::new();
    for g in enumerate_gl2(ell) {
        class.insert(t.conjugate_by(&g));
    }
    checked("class of T", ell, class.len() as u64, ell * ell - 1)
}

/// Sum of the quadratic character of the determinant over the
/// non-unipotent part of GL2(F_ell), for odd ell. Equals -ell^2: the
/// unipotent set has determinant 1 throughout, so removing it biases the
/// otherwise balanced character sum.
pub fn det_character_sum(ell: u64) -> i64 {
    assert!(ell > 2, "determinant character needs an odd modulus");
    enumerate_gl2(ell)
        .iter()
        .filter(|m| !is_unipotent(m))
        .map(|m| legendre(m.det() as i64, ell) as i64)
        .sum()
}

/// Sum of the sign character over the non-unipotent part of GL2(F_2).
/// Equals 2: only the two 3-cycles survive, each of sign +1.
pub fn sign_character_sum() -> i64 {
    enumerate_gl2(2)
        .iter()
        .filter(|m| !is_unipotent(m))
        .map(|m| sign_character(m) as i64)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::Rational;

    #[test]
    fn group_orders() {
        assert_eq!(enumerate_gl2(2).len(), 6);
        assert_eq!(enumerate_gl2(3).len(), 48);
        assert_eq!(enumerate_gl2(5).len(), 480);
        for ell in [2u64, 3, 5, 7, 11, 13] {
            assert_eq!(enumerate_gl2(ell).len() as u64, gl2_order(ell));
        }
    }

    #[test]
    fn sign_character_values() {
        assert_eq!(sign_character(&Mat2::identity(2)), 1);
        assert_eq!(sign_character(&Mat2::new(2, 0, 1, 1, 0)), -1);
        assert_eq!(sign_character(&Mat2::new(2, 0, 1, 1, 1)), 1);
    }

    #[test]
    fn sign_character_is_a_homomorphism() {
        let g = enumerate_gl2(2);
        for m in &g {
            for n in &g {
                assert_eq!(
                    sign_character(&m.mul(n)),
                    sign_character(m) * sign_character(n)
                );
            }
        }
    }

    #[test]
    fn unipotent_examples() {
        assert!(is_unipotent(&Mat2::identity(5)));
        assert!(is_unipotent(&Mat2::unipotent_rep(5)));
        assert!(!is_unipotent(&Mat2::new(5, 2, 0, 0, 3)));
        assert!(is_unipotent(&Mat2::new(2, 0, 1, 1, 0)));
    }

    #[test]
    fn counts_match_closed_forms() {
        for ell in [2u64, 3, 5, 7] {
            assert_eq!(count_unipotent(ell).unwrap(), ell * ell);
            assert_eq!(centralizer_order_t(ell).unwrap(), ell * ell - ell);
            assert_eq!(class_size_t(ell).unwrap(), ell * ell - 1);
        }
    }

    #[test]
    fn unipotent_means_conjugate_to_unitriangular() {
        // Exhaustive cross-check of the trace/det criterion against an
        // explicit conjugation search.
        for ell in [2u64, 3, 5] {
            let group = enumerate_gl2(ell);
            for m in &group {
                let by_search = group.iter().any(|g| {
                    let c = m.conjugate_by(g);
                    c.a == 1 && c.c == 0 && c.d == 1
                });
                assert_eq!(is_unipotent(m), by_search, "ell={ell} m={m:?}");
            }
        }
    }

    #[test]
    fn character_sums() {
        assert_eq!(det_character_sum(3), -9);
        assert_eq!(det_character_sum(5), -25);
        assert_eq!(det_character_sum(7), -49);
        assert_eq!(sign_character_sum(), 2);
    }

    #[test]
    fn sign_sum_structure_at_two() {
        let non_uni: Vec<Mat2> = enumerate_gl2(2)
            .into_iter()
            .filter(|m| !is_unipotent(m))
            .collect();
        assert_eq!(non_uni.len(), 2);
        for m in &non_uni {
            assert_eq!(sign_character(m), 1);
            // Each is a 3-cycle: m^3 = 1, m != 1.
            assert_ne!(*m, Mat2::identity(2));
            assert_eq!(m.mul(m).mul(m), Mat2::identity(2));
        }
    }

    #[test]
    fn unipotent_set_has_determinant_one() {
        for ell in [2u64, 3, 5, 7] {
            for m in enumerate_gl2(ell) {
                if is_unipotent(&m) {
                    assert_eq!(m.det(), 1 % ell);
                }
            }
        }
    }

    #[test]
    fn unipotent_fraction_matches_local_density() {
        // ell^2 / |GL2| = ell / ((ell-1)^2 (ell+1)), the bad-event rate.
        for ell in [2u64, 3, 5, 7, 11, 13] {
            let lhs = Rational::new(
                count_unipotent(ell).unwrap() as i128,
                gl2_order(ell) as i128,
            );
            let l = ell as i128;
            let rhs = Rational::new(l, (l - 1) * (l - 1) * (l + 1));
            assert_eq!(lhs, rhs);
        }
    }
}
