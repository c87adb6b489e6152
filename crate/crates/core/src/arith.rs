//! Modular and multiplicative number theory primitives: exact modular
//! arithmetic with double-width intermediates, quadratic symbols, modular
//! square roots, 64-bit factorization and a segmented prime sieve.

use std::sync::OnceLock;

use thiserror::Error;

/// Moduli are capped below 2^62 so every intermediate fits in u128.
pub const MAX_MODULUS: u64 = 1 << 62;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ArithError {
    #[error("{0} is not invertible modulo {1}")]
    NotInvertible(u64, u64),
    #[error("{0} is not a quadratic residue modulo {1}")]
    NonResidue(u64, u64),
    #[error("cannot factor zero")]
    ZeroInput,
}

/// (a * b) mod m, exact for any m < 2^62.
#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    debug_assert!(m < MAX_MODULUS && a < m && b < m);
    (a as u128 * b as u128 % m as u128) as u64
}

/// a^e mod m by square-and-multiply.
pub fn pow_mod(a: u64, mut e: u64, m: u64) -> u64 {
    debug_assert!(m < MAX_MODULUS);
    if m == 1 {
        return 0;
    }
    let mut base = a % m;
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        e >>= 1;
    }
    acc
}

fn extended_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if a == 0 {
        return (b, 0, 1);
    }
    let (g, x, y) = extended_gcd(b % a, a);
    (g, y - (b / a) * x, x)
}

/// a^{-1} mod m. Errors when gcd(a, m) > 1.
pub fn inv_mod(a: u64, m: u64) -> Result<u64, ArithError> {
    let (g, x, _) = extended_gcd((a % m) as i128, m as i128);
    if g != 1 {
        return Err(ArithError::NotInvertible(a, m));
    }
    Ok(x.rem_euclid(m as i128) as u64)
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Legendre symbol (a/p) for an odd prime p, via Euler's criterion.
pub fn legendre(a: i64, p: u64) -> i32 {
    debug_assert!(p > 2);
    let r = a.rem_euclid(p as i64) as u64;
    if r == 0 {
        return 0;
    }
    if pow_mod(r, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Jacobi symbol (a/n) for odd n > 0.
fn jacobi(a: i64, mut n: u64) -> i32 {
    debug_assert!(n % 2 == 1);
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut result = 1i32;
    while a != 0 {
        while a.is_multiple_of(2) {
            a /= 2;
            let nm8 = n % 8;
            if nm8 == 3 || nm8 == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Kronecker symbol (a/n), the extension of the Legendre symbol to all
/// integers n. Realizes the real primitive character attached to a
/// fundamental discriminant via n -> (d/n).
pub fn kronecker(a: i64, n: i64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut result = 1i32;
    let mut n_abs = n.unsigned_abs();
    if n < 0 && a < 0 {
        result = -result;
    }
    let twos = n_abs.trailing_zeros();
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        n_abs >>= twos;
        if twos % 2 == 1 {
            let am8 = a.rem_euclid(8);
            if am8 == 3 || am8 == 5 {
                result = -result;
            }
        }
    }
    result * jacobi(a, n_abs)
}

/// Square root of a modulo an odd prime p via Tonelli-Shanks.
/// Returns the smaller of the two roots so results are reproducible.
pub fn sqrt_mod(a: u64, p: u64) -> Result<u64, ArithError> {
    debug_assert!(p > 2 && a < p);
    if a == 0 {
        return Ok(0);
    }
    if legendre(a as i64, p) == -1 {
        return Err(ArithError::NonResidue(a, p));
    }
    let r = if p % 4 == 3 {
        pow_mod(a, (p + 1) / 4, p)
    } else {
        // p = q * 2^s + 1 with q odd
        let s = (p - 1).trailing_zeros();
        let q = (p - 1) >> s;
        let mut z = 2u64;
        while legendre(z as i64, p) != -1 {
            z += 1;
        }
        let mut c = pow_mod(z, q, p);
        let mut t = pow_mod(a, q, p);
        let mut x = pow_mod(a, q.div_ceil(2), p);
        let mut m = s;
        while t != 1 {
            let mut i = 0u32;
            let mut t2 = t;
            while t2 != 1 {
                t2 = mul_mod(t2, t2, p);
                i += 1;
            }
            let b = pow_mod(c, 1 << (m - i - 1), p);
            x = mul_mod(x, b, p);
            c = mul_mod(b, b, p);
            t = mul_mod(t, c, p);
            m = i;
        }
        x
    };
    Ok(r.min(p - r))
}

/// Deterministic Miller-Rabin, valid for all n < 2^64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    // This base set is a proven witness set for all n < 2^64.
    'witness: for &a in &[2u64, 325, 9375, 28178, 450775, 9780504, 1795265022] {
        let a = a % n;
        if a == 0 {
            continue;
        }
        let mut x = pow_mod_wide(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_wide(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

// Full-width variants for primality/factorization, where n may reach 2^64.
#[inline]
fn mul_mod_wide(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn pow_mod_wide(a: u64, mut e: u64, m: u64) -> u64 {
    let mut base = a % m;
    let mut acc = 1u64 % m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod_wide(acc, base, m);
        }
        base = mul_mod_wide(base, base, m);
        e >>= 1;
    }
    acc
}

/// Complete factorization of a nonzero signed 64-bit integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub value: i64,
    pub sign: i64,
    /// (prime, exponent) pairs with primes strictly increasing.
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Distinct prime divisors in increasing order.
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// sign * prod p^e, recomputed from the parts.
    pub fn reconstruct(&self) -> i128 {
        let mut acc = self.sign as i128;
        for &(p, e) in &self.factors {
            for _ in 0..e {
                acc *= p as i128;
            }
        }
        acc
    }
}

const TRIAL_BOUND: u64 = 1_000_000;

fn trial_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| sieve_primes(TRIAL_BOUND))
}

/// Pollard rho (Brent's cycle detection) for an odd composite n with no
/// prime factor below the trial bound.
fn pollard_rho(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let mut x = 2u64;
        let mut y = 2u64;
        let mut d = 1u64;
        let mut q = 1u64;
        let mut r = 1u64;
        let mut ys = y;
        while d == 1 {
            x = y;
            for _ in 0..r {
                y = (mul_mod_wide(y, y, n) + c) % n;
            }
            let mut k = 0u64;
            while k < r && d == 1 {
                ys = y;
                let lim = 128.min(r - k);
                for _ in 0..lim {
                    y = (mul_mod_wide(y, y, n) + c) % n;
                    q = mul_mod_wide(q, x.abs_diff(y), n);
                }
                d = gcd(q, n);
                k += lim;
            }
            r *= 2;
        }
        if d == n {
            // Backtrack one step at a time.
            loop {
                ys = (mul_mod_wide(ys, ys, n) + c) % n;
                d = gcd(x.abs_diff(ys), n);
                if d > 1 {
                    break;
                }
            }
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

fn factor_u64_into(mut n: u64, out: &mut Vec<(u64, u32)>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push((n, 1));
        return;
    }
    for &p in trial_primes() {
        if p * p > n {
            break;
        }
        if n.is_multiple_of(p) {
            let mut e = 0u32;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
            if n == 1 {
                return;
            }
            if is_prime(n) {
                out.push((n, 1));
                return;
            }
        }
    }
    // n is now a composite with all prime factors above the trial bound.
    let d = pollard_rho(n);
    let mut parts = Vec::new();
    factor_u64_into(d, &mut parts);
    factor_u64_into(n / d, &mut parts);
    out.extend(parts);
    // Merge duplicates produced by the recursive split.
    out.sort_unstable_by_key(|&(p, _)| p);
    let mut merged: Vec<(u64, u32)> = Vec::with_capacity(out.len());
    for &(p, e) in out.iter() {
        match merged.last_mut() {
            Some(last) if last.0 == p => last.1 += e,
            _ => merged.push((p, e)),
        }
    }
    *out = merged;
}

/// Factor a nonzero signed integer by trial division up to 10^6 followed by
/// Pollard rho, with deterministic Miller-Rabin certifying every prime.
pub fn factorize(n: i64) -> Result<Factorization, ArithError> {
    if n == 0 {
        return Err(ArithError::ZeroInput);
    }
    let sign = if n < 0 { -1 } else { 1 };
    let mut factors = Vec::new();
    factor_u64_into(n.unsigned_abs(), &mut factors);
    factors.sort_unstable_by_key(|&(p, _)| p);
    Ok(Factorization {
        value: n,
        sign,
        factors,
    })
}

/// Fundamental discriminant of Q(sqrt(delta)).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FundamentalDiscriminant {
    pub value: i64,
    /// Set when delta is a perfect square, i.e. Q(sqrt(delta)) = Q.
    pub non_quadratic: bool,
}

/// Discriminant of the quadratic field Q(sqrt(delta)): take the squarefree
/// kernel d of delta (sign preserved), then D = d if d = 1 (mod 4), else 4d.
pub fn fundamental_discriminant(delta: i64) -> FundamentalDiscriminant {
    assert!(delta != 0, "discriminant must be nonzero");
    let f = factorize(delta).expect("nonzero");
    let mut kernel: i64 = f.sign;
    for &(p, e) in &f.factors {
        if e % 2 == 1 {
            kernel *= p as i64;
        }
    }
    if kernel == 1 {
        return FundamentalDiscriminant {
            value: 1,
            non_quadratic: true,
        };
    }
    let value = if kernel.rem_euclid(4) == 1 {
        kernel
    } else {
        4 * kernel
    };
    FundamentalDiscriminant {
        value,
        non_quadratic: false,
    }
}

/// All primes <= bound, in order, by a segmented sieve of Eratosthenes.
pub fn sieve_primes(bound: u64) -> Vec<u64> {
    assert!(bound <= 1 << 32, "sieve bound exceeds the supported range");
    if bound < 2 {
        return Vec::new();
    }
    let root = bound.isqrt() as usize;
    // Base sieve up to sqrt(bound).
    let mut base_is_prime = vec![true; root + 1];
    let mut base = Vec::new();
    for i in 2..=root {
        if base_is_prime[i] {
            base.push(i as u64);
            for j in (i * i..=root).step_by(i) {
                base_is_prime[j] = false;
            }
        }
    }
    let mut primes: Vec<u64> = base.clone();
    const SEGMENT: u64 = 1 << 20;
    let mut lo = root as u64 + 1;
    let mut composite = vec![false; SEGMENT as usize];
    while lo <= bound {
        let hi = (lo + SEGMENT - 1).min(bound);
        let len = (hi - lo + 1) as usize;
        composite[..len].fill(false);
        for &p in &base {
            if p * p > hi {
                break;
            }
            let mut start = lo.div_ceil(p) * p;
            if start < p * p {
                start = p * p;
            }
            let mut j = start;
            while j <= hi {
                composite[(j - lo) as usize] = true;
                j += p;
            }
        }
        for (i, &is_composite) in composite[..len].iter().enumerate() {
            if !is_composite {
                primes.push(lo + i as u64);
            }
        }
        lo = hi + 1;
    }
    primes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_mod_small_cases() {
        assert_eq!(mul_mod(3, 4, 5), 2);
        let m = 10_007;
        assert_eq!(mul_mod(m - 1, m - 1, m), 1);
    }

    #[test]
    fn mul_mod_near_cap() {
        // (2^61)^2 mod (2^62 - 57), frozen from an arbitrary-precision run.
        let m = (1u64 << 62) - 57;
        assert_eq!(mul_mod(1 << 61, 1 << 61, m), 1_152_921_504_606_847_774);
    }

    #[test]
    fn pow_and_inverse() {
        assert_eq!(pow_mod(2, 10, 1000), 24);
        assert_eq!(inv_mod(3, 7), Ok(5));
        assert_eq!(inv_mod(6, 9), Err(ArithError::NotInvertible(6, 9)));
        for a in 1u64..97 {
            let inv = inv_mod(a, 97).unwrap();
            assert_eq!(mul_mod(a, inv, 97), 1);
        }
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre(2, 7), 1);
        assert_eq!(legendre(3, 7), -1);
        assert_eq!(legendre(0, 7), 0);
        assert_eq!(legendre(-1, 5), 1);
        assert_eq!(legendre(-1, 7), -1);
    }

    #[test]
    fn legendre_is_multiplicative() {
        for &p in &[3u64, 7, 11, 13, 31] {
            for a in -20i64..20 {
                for b in -20i64..20 {
                    assert_eq!(legendre(a * b, p), legendre(a, p) * legendre(b, p));
                }
            }
        }
    }

    #[test]
    fn kronecker_character_table() {
        // chi_{-3}(n) for n = 1, 5, 7, 11.
        assert_eq!(kronecker(-3, 1), 1);
        assert_eq!(kronecker(-3, 5), -1);
        assert_eq!(kronecker(-3, 7), 1);
        assert_eq!(kronecker(-3, 11), -1);
        assert_eq!(kronecker(-3, 3), 0);
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(-4, 3), -1);
        assert_eq!(kronecker(-4, 5), 1);
    }

    #[test]
    fn kronecker_splits_over_legendre_factors() {
        // For squarefree d = 1 (mod 4): (d/n) = prod over odd primes l | d
        // of (n/l), for all n coprime to d.
        for &d in &[-3i64, 5, -7, 37, -31, -15] {
            let odd_primes: Vec<u64> = factorize(d).unwrap().primes().filter(|&p| p != 2).collect();
            for n in 1i64..=1000 {
                if gcd(n.unsigned_abs(), d.unsigned_abs()) != 1 {
                    continue;
                }
                let lhs = kronecker(d, n);
                let rhs: i32 = odd_primes.iter().map(|&l| legendre(n, l)).product();
                assert_eq!(lhs, rhs, "d={d} n={n}");
            }
        }
    }

    #[test]
    fn kronecker_is_completely_multiplicative() {
        for &d in &[-3i64, 5, -7, 37, -31] {
            for m in 1i64..60 {
                for n in 1i64..60 {
                    if gcd((m * n).unsigned_abs(), d.unsigned_abs()) != 1 {
                        continue;
                    }
                    assert_eq!(kronecker(d, m * n), kronecker(d, m) * kronecker(d, n));
                }
            }
        }
    }

    #[test]
    fn sqrt_mod_examples() {
        assert_eq!(sqrt_mod(2, 7), Ok(3));
        assert_eq!(sqrt_mod(5, 7), Err(ArithError::NonResidue(5, 7)));
        assert_eq!(sqrt_mod(10, 13), Ok(6));
    }

    #[test]
    fn sqrt_mod_agrees_with_scan() {
        for &p in &[3u64, 5, 7, 13, 17, 101, 10_007] {
            for a in 0..p.min(300) {
                let by_scan = (0..p).find(|&r| mul_mod(r, r, p) == a);
                match sqrt_mod(a, p) {
                    Ok(r) => {
                        assert_eq!(mul_mod(r, r, p), a);
                        assert!(r <= p - r || r == 0, "not the smaller root");
                        assert!(by_scan.is_some());
                    }
                    Err(_) => {
                        assert_eq!(legendre(a as i64, p), -1);
                        assert!(by_scan.is_none());
                    }
                }
            }
        }
    }

    #[test]
    fn factorize_known_values() {
        let f = factorize(-496).unwrap();
        assert_eq!(f.sign, -1);
        assert_eq!(f.factors, vec![(2, 4), (31, 1)]);
        assert_eq!(factorize(37).unwrap().factors, vec![(37, 1)]);
        // 2^62 - 57 is prime; exercises Miller-Rabin past the trial bound.
        let big = (1i64 << 62) - 57;
        assert_eq!(
            factorize(big).unwrap().factors,
            vec![(4_611_686_018_427_387_847, 1)]
        );
        assert_eq!(factorize(0), Err(ArithError::ZeroInput));
    }

    #[test]
    fn factorize_semiprime_beyond_trial_bound() {
        // Forces the Pollard rho path: both factors exceed 10^6.
        let p = 1_000_003u64;
        let q = 1_000_033u64;
        let f = factorize((p * q) as i64).unwrap();
        assert_eq!(f.factors, vec![(p, 1), (q, 1)]);
    }

    #[test]
    fn is_prime_small_table() {
        let primes = sieve_primes(2000);
        for n in 0..2000u64 {
            assert_eq!(is_prime(n), primes.binary_search(&n).is_ok(), "n={n}");
        }
        assert!(is_prime((1 << 62) - 57));
        assert!(!is_prime(u64::MAX)); // 2^64 - 1 = 3 * 5 * 17 * 257 * 641 * 65537 * 6700417
    }

    #[test]
    fn fundamental_discriminant_examples() {
        assert_eq!(
            fundamental_discriminant(-496),
            FundamentalDiscriminant {
                value: -31,
                non_quadratic: false
            }
        );
        assert_eq!(fundamental_discriminant(37).value, 37);
        assert_eq!(fundamental_discriminant(-75).value, -3);
        assert_eq!(fundamental_discriminant(-64).value, -4);
        assert_eq!(fundamental_discriminant(8).value, 8);
        assert_eq!(fundamental_discriminant(-8).value, -8);
        let sq = fundamental_discriminant(64);
        assert!(sq.non_quadratic);
        assert_eq!(sq.value, 1);
    }

    #[test]
    fn fundamental_discriminant_square_invariance() {
        for delta in [-496i64, 37, -75, 5, -24, 13] {
            let d = fundamental_discriminant(delta);
            for k in [2i64, 3, 5, 12] {
                assert_eq!(fundamental_discriminant(delta * k * k), d);
            }
        }
    }

    #[test]
    fn sieve_counts() {
        assert_eq!(sieve_primes(10), vec![2, 3, 5, 7]);
        assert_eq!(sieve_primes(100).len(), 25);
        assert_eq!(sieve_primes(1_000_000).len(), 78_498);
        assert_eq!(sieve_primes(1), Vec::<u64>::new());
        assert_eq!(sieve_primes(2), vec![2]);
    }

    #[test]
    fn sieve_matches_naive_oracle() {
        // Independent oracle: plain trial-division primality.
        let naive: Vec<u64> = (2u64..=3000)
            .filter(|&n| (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0))
            .collect();
        assert_eq!(sieve_primes(3000), naive);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn factorize_reconstructs(n in prop::num::i64::ANY) {
                prop_assume!(n != 0);
                let f = factorize(n).unwrap();
                prop_assert_eq!(f.reconstruct(), n as i128);
                prop_assert!(f.factors.windows(2).all(|w| w[0].0 < w[1].0));
                for (p, _) in &f.factors {
                    prop_assert!(is_prime(*p));
                }
            }

            #[test]
            fn mul_mod_matches_u128(a in 0u64..u64::MAX, b in 0u64..u64::MAX, m in 2u64..MAX_MODULUS) {
                let (a, b) = (a % m, b % m);
                prop_assert_eq!(mul_mod(a, b, m) as u128, a as u128 * b as u128 % m as u128);
            }
        }
    }
}
