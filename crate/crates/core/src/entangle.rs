//! Exact densities for a finite set of primes S: the naive product of local
//! avoidance densities, the entanglement correction for discriminants
//! D = 1 (mod 4), the index-2 subgroup membership predicate that encodes
//! the sqrt(D) coincidence between the 2-division and D-division fields,
//! and an exhaustive-enumeration oracle for all of it.
//!
//! The correction exists because the quadratic character chi_D of det and
//! the sign character at 2 agree on every Frobenius: tuples of local matrix
//! images live in an index-2 subgroup of the full product, and conditioning
//! on that subgroup shifts the density of "no local bad event".

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{factorize, is_prime, legendre};
use crate::gl2::{enumerate_gl2, gl2_order, is_unipotent, sign_character, Mat2, MAX_ENUM_ELL};
use crate::rational::Rational;

/// Cartesian enumeration budget: product of |GL2(F_ell)| over S.
pub const CARTESIAN_BUDGET: u128 = 10_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EntangleError {
    #[error("exact rational overflowed 128 bits; shrink the prime set")]
    Overflow,
    #[error("correction factor requires D = 1 (mod 4) and D != 1")]
    WrongCase,
    #[error("matrix component for required prime {0} is missing")]
    MissingComponent(u64),
    #[error("enumeration exceeds the budget: {0}")]
    TooLarge(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
}

/// The local avoidance density 1 - ell / ((ell-1)^2 (ell+1)): the exact
/// fraction of GL2(F_ell) lying outside the unipotent classes.
pub fn local_factor(ell: u64) -> Rational {
    let l = ell as i128;
    Rational::ONE - Rational::new(l, (l - 1) * (l - 1) * (l + 1))
}

/// Product of local factors over a set of primes, as an exact rational.
/// This is the density prediction that treats the primes independently.
/// The reduced denominator gains about 3 log2(l) bits per prime, so sets
/// beyond roughly the first dozen primes overflow the i128 range.
pub fn naive_density(primes: &[u64]) -> Result<Rational, EntangleError> {
    let mut acc = Rational::ONE;
    for &l in primes {
        acc = acc
            .checked_mul(&local_factor(l))
            .ok_or(EntangleError::Overflow)?;
    }
    Ok(acc)
}

/// The entanglement correction 1 + prod over primes l | D of
/// -l / (l^3 - l^2 - 2l + 1), for fundamental D = 1 (mod 4).
pub fn correction_factor(d: i64) -> Result<Rational, EntangleError> {
    if d == 1 || d.rem_euclid(4) != 1 {
        return Err(EntangleError::WrongCase);
    }
    let mut prod = Rational::ONE;
    for l in factorize(d).expect("nonzero").primes() {
        let l = l as i128;
        let term = Rational::new(-l, l * l * l - l * l - 2 * l + 1);
        prod = prod.checked_mul(&term).ok_or(EntangleError::Overflow)?;
    }
    Rational::ONE
        .checked_add(&prod)
        .ok_or(EntangleError::Overflow)
}

/// A finite prime set together with a fundamental discriminant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntangleSpec {
    primes: Vec<u64>,
    d: i64,
}

impl EntangleSpec {
    pub fn new(mut primes: Vec<u64>, d: i64) -> Result<EntangleSpec, EntangleError> {
        primes.sort_unstable();
        primes.dedup();
        if primes.is_empty() {
            return Err(EntangleError::InvalidSpec("empty prime set".into()));
        }
        for &l in &primes {
            if !is_prime(l) {
                return Err(EntangleError::InvalidSpec(format!("{l} is not prime")));
            }
        }
        let r = d.rem_euclid(4);
        if d == 1 || d == 0 || (r != 0 && r != 1) {
            return Err(EntangleError::InvalidSpec(format!(
                "{d} is not a quadratic field discriminant"
            )));
        }
        Ok(EntangleSpec { primes, d })
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn discriminant(&self) -> i64 {
        self.d
    }

    /// Odd primes dividing D, all of which must carry a character factor.
    fn character_primes(&self) -> Vec<u64> {
        factorize(self.d)
            .expect("nonzero")
            .primes()
            .filter(|&l| l != 2)
            .collect()
    }

    /// True when S contains every prime of 2D, i.e. the case where the
    /// index-2 restriction is visible at level prod(S).
    pub fn covers_entanglement(&self) -> bool {
        if self.d.rem_euclid(4) != 1 {
            return false;
        }
        let mut needed: Vec<u64> = self.character_primes();
        needed.push(2);
        needed.iter().all(|l| self.primes.contains(l))
    }

    /// The closed-form density of "no prime of S is a common factor of
    /// p - 1 and #E(F_p)": the naive product, corrected when S covers all
    /// primes of 2D and D = 1 (mod 4).
    pub fn density(&self) -> Result<Rational, EntangleError> {
        let base = naive_density(&self.primes)?;
        if self.covers_entanglement() {
            base.checked_mul(&correction_factor(self.d)?)
                .ok_or(EntangleError::Overflow)
        } else {
            Ok(base)
        }
    }
}

/// Membership in the index-2 subgroup: the product over odd primes l | D of
/// chi_l(det M_l) must equal the sign character of the component at 2.
pub fn in_serre_subgroup(components: &BTreeMap<u64, Mat2>, d: i64) -> Result<bool, EntangleError> {
    let m2 = components
        .get(&2)
        .ok_or(EntangleError::MissingComponent(2))?;
    let mut chi = 1i32;
    for l in factorize(d).expect("nonzero").primes().filter(|&l| l != 2) {
        let m = components
            .get(&l)
            .ok_or(EntangleError::MissingComponent(l))?;
        chi *= legendre(m.det() as i64, l);
    }
    Ok(chi == sign_character(m2))
}

/// Which oracle path produced an enumerated density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnumerationStrategy {
    /// Walk every tuple of the full product of GL2(F_ell).
    Cartesian,
    /// Combine per-prime character-split counts; exact, and cheap even when
    /// the full product is out of reach.
    PerPrimeAggregation,
}

/// Exhaustive-enumeration oracle for `EntangleSpec::density`, independent of
/// the closed forms. For D = 1 (mod 4) with S covering 2D it conditions on
/// the index-2 subgroup; for D = 0 (mod 4) it counts over the full product.
pub fn enumerate_density(
    spec: &EntangleSpec,
    strategy: EnumerationStrategy,
) -> Result<Rational, EntangleError> {
    for &l in spec.primes() {
        if l > MAX_ENUM_ELL {
            return Err(EntangleError::TooLarge(format!(
                "enumeration of GL2(F_{l}) is out of range"
            )));
        }
    }
    let restricted = spec.covers_entanglement();
    if spec.d.rem_euclid(4) == 1 && !restricted {
        // Without full coverage of 2D the restriction is invisible at this
        // level and the oracle would silently test the wrong statement.
        return Err(EntangleError::InvalidSpec(
            "oracle needs every prime of 2D in S when D = 1 (mod 4)".into(),
        ));
    }
    match strategy {
        EnumerationStrategy::Cartesian => cartesian_density(spec, restricted),
        EnumerationStrategy::PerPrimeAggregation => aggregated_density(spec, restricted),
    }
}

/// Count, by full enumeration, the tuples satisfying the index-2 condition
/// together with the size of the unrestricted product.
pub fn restricted_product_size(spec: &EntangleSpec) -> Result<(u128, u128), EntangleError> {
    if !spec.covers_entanglement() {
        return Err(EntangleError::InvalidSpec(
            "the index-2 subgroup needs D = 1 (mod 4) and every prime of 2D in S".into(),
        ));
    }
    let (_, member, size) = cartesian_counts(spec, true)?;
    Ok((member as u128, size))
}

fn cartesian_density(spec: &EntangleSpec, restricted: bool) -> Result<Rational, EntangleError> {
    let (avoid, member, size) = cartesian_counts(spec, restricted)?;
    if restricted {
        // Sanity anchor for the oracle itself: the subgroup has index 2.
        debug_assert_eq!(member as u128 * 2, size);
    } else {
        debug_assert_eq!(member as u128, size);
    }
    Ok(Rational::new(avoid as i128, member as i128))
}

fn cartesian_counts(
    spec: &EntangleSpec,
    restricted: bool,
) -> Result<(u64, u64, u128), EntangleError> {
    let size: u128 = spec
        .primes()
        .iter()
        .map(|&l| gl2_order(l) as u128)
        .product();
    if size > CARTESIAN_BUDGET {
        return Err(EntangleError::TooLarge(format!(
            "{size} tuples exceed the budget of {CARTESIAN_BUDGET}"
        )));
    }
    let groups: Vec<Vec<Mat2>> = spec.primes().iter().map(|&l| enumerate_gl2(l)).collect();
    let chi_primes = spec.character_primes();
    // Per component: (is unipotent, character contribution).
    let annotated: Vec<Vec<(bool, i32)>> = groups
        .iter()
        .zip(spec.primes())
        .map(|(group, &l)| {
            group
                .iter()
                .map(|m| {
                    let chi = if l == 2 {
                        sign_character(m)
                    } else if chi_primes.contains(&l) {
                        legendre(m.det() as i64, l)
                    } else {
                        1
                    };
                    (is_unipotent(m), chi)
                })
                .collect()
        })
        .collect();

    // Fold the outermost factor in parallel; all counts are integers, so
    // the reduction order cannot affect the result.
    let rest: Vec<&[(bool, i32)]> = annotated[1..].iter().map(|v| v.as_slice()).collect();
    let (member, avoid) = annotated[0]
        .par_iter()
        .map(|&(uni0, chi0)| {
            let mut member = 0u64;
            let mut avoid = 0u64;
            let mut stack = vec![(0usize, uni0, chi0)];
            // Depth-first product walk without materializing tuples.
            while let Some((depth, any_uni, chi)) = stack.pop() {
                if depth == rest.len() {
                    // For D = 1 (mod 4): member iff chi-product equals the
                    // sign at 2 (folded into chi as sign * prod = +1).
                    let is_member = !restricted || chi == 1;
                    if is_member {
                        member += 1;
                        if !any_uni {
                            avoid += 1;
                        }
                    }
                    continue;
                }
                for &(uni, c) in rest[depth] {
                    stack.push((depth + 1, any_uni || uni, chi * c));
                }
            }
            (member, avoid)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));

    Ok((avoid, member, size))
}

fn aggregated_density(spec: &EntangleSpec, restricted: bool) -> Result<Rational, EntangleError> {
    // Per prime, split the non-unipotent count by character value. Every
    // count here comes from enumeration, never from the closed forms the
    // oracle is meant to check.
    let chi_primes = spec.character_primes();
    let mut plus_minus: Vec<(u128, u128)> = Vec::new(); // primes carrying a character
    let mut free: u128 = 1; // counts at primes without one
    let mut total: u128 = 1;
    for &l in spec.primes() {
        let carries_chi = restricted && (l == 2 || chi_primes.contains(&l));
        let mut plus = 0u128;
        let mut minus = 0u128;
        let mut group_size = 0u128;
        for m in enumerate_gl2(l) {
            group_size += 1;
            if is_unipotent(&m) {
                continue;
            }
            let chi = if l == 2 {
                sign_character(&m)
            } else {
                legendre(m.det() as i64, l)
            };
            if chi >= 0 {
                plus += 1;
            } else {
                minus += 1;
            }
        }
        total = total
            .checked_mul(group_size)
            .ok_or(EntangleError::Overflow)?;
        if carries_chi {
            plus_minus.push((plus, minus));
        } else {
            free = free
                .checked_mul(plus + minus)
                .ok_or(EntangleError::Overflow)?;
        }
    }
    if !restricted {
        return Ok(Rational::new(
            i128::try_from(free).map_err(|_| EntangleError::Overflow)?,
            i128::try_from(total).map_err(|_| EntangleError::Overflow)?,
        ));
    }
    // Tuples over the character-carrying primes whose chi values multiply
    // to +1: expand prod(plus + minus) keeping the even-minus-count terms,
    // which is (prod(plus + minus) + prod(plus - minus)) / 2.
    let mut all = 1i128;
    let mut signed = 1i128;
    for &(plus, minus) in &plus_minus {
        all = all
            .checked_mul((plus + minus) as i128)
            .ok_or(EntangleError::Overflow)?;
        signed = signed
            .checked_mul(plus as i128 - minus as i128)
            .ok_or(EntangleError::Overflow)?;
    }
    let matched = (all + signed) / 2;
    let avoid = matched
        .checked_mul(i128::try_from(free).map_err(|_| EntangleError::Overflow)?)
        .ok_or(EntangleError::Overflow)?;
    let member = i128::try_from(total / 2).map_err(|_| EntangleError::Overflow)?;
    Ok(Rational::new(avoid, member))
}
