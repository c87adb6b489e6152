//! The universal density constant C = prod over primes of
//! (1 - l/((l-1)^2 (l+1))), truncated with a certified error bound, and the
//! per-curve conjectural density: C itself when the fundamental
//! discriminant D is 0 (mod 4), and C times the entanglement correction
//! when D is 1 (mod 4).

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{fundamental_discriminant, sieve_primes};
use crate::curve::WeierstrassCurve;
use crate::entangle::{correction_factor, local_factor};
use crate::rational::Rational;

/// A truncated Euler product with a certified tail bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub truncation_prime: u64,
    /// Upper bound on |true - value| from the tail estimate
    /// sum_{l > L} l/((l-1)^2(l+1)) < 2/L, doubled for safety.
    pub error_bound: f64,
}

/// Fixed chunking for the log-sum so the reduction order, and therefore the
/// value, is identical no matter how the work is scheduled.
const LOG_CHUNK: usize = 4096;

/// C truncated at the largest prime <= limit. Factors are accumulated as a
/// compensated sum of logarithms of exact rationals: chunks of fixed size
/// are summed independently (in parallel) and merged in chunk order, so the
/// result is bit-identical for any thread count.
pub fn universal_constant(limit: u64) -> ConstantEstimate {
    assert!(limit >= 100, "truncation bound too small to be meaningful");
    let primes = sieve_primes(limit);
    let chunk_sums: Vec<f64> = primes
        .par_chunks(LOG_CHUNK)
        .map(|chunk| {
            let mut sum = 0.0f64;
            let mut carry = 0.0f64;
            for &l in chunk {
                let f = local_factor(l);
                let term = (f.numerator() as f64).ln() - (f.denominator() as f64).ln();
                let y = term - carry;
                let t = sum + y;
                carry = (t - sum) - y;
                sum = t;
            }
            sum
        })
        .collect();
    let mut log_sum = 0.0f64;
    let mut carry = 0.0f64;
    for s in chunk_sums {
        let y = s - carry;
        let t = log_sum + y;
        carry = (t - log_sum) - y;
        log_sum = t;
    }
    let value = log_sum.exp();
    debug_assert!(value > 0.0 && value < 1.0);
    ConstantEstimate {
        value,
        truncation_prime: *primes.last().expect("limit >= 100"),
        error_bound: 4.0 / limit as f64,
    }
}

/// The conjectural density of primes with gcd(#E(F_p), p-1) = 1 for a curve
/// assumed to have the largest possible adelic Galois image.
#[derive(Debug, Clone, Serialize)]
pub struct CurveConjecture {
    pub density: ConstantEstimate,
    pub discriminant: i64,
    pub fundamental_discriminant: i64,
    /// Exact correction applied to C (1 when D = 0 (mod 4)).
    pub correction: Rational,
    /// Set when the model discriminant is a perfect square: the adelic
    /// image is then strictly smaller and the prediction does not apply.
    pub non_serre: bool,
}

/// Evaluate the conjecture for a curve: D = disc Q(sqrt(Delta)), then
/// C * correction(D) if D = 1 (mod 4), else C. A perfect-square Delta is
/// flagged rather than rejected so exploratory runs still produce output.
pub fn conjectural_density(curve: &WeierstrassCurve, limit: u64) -> CurveConjecture {
    let base = universal_constant(limit);
    let fd = fundamental_discriminant(curve.delta);
    let correction = if fd.non_quadratic {
        Rational::ONE
    } else if fd.value.rem_euclid(4) == 1 {
        correction_factor(fd.value).expect("fundamental D = 1 (mod 4)")
    } else {
        Rational::ONE
    };
    CurveConjecture {
        density: ConstantEstimate {
            value: base.value * correction.to_f64(),
            truncation_prime: base.truncation_prime,
            error_bound: base.error_bound,
        },
        discriminant: curve.delta,
        fundamental_discriminant: fd.value,
        correction,
        non_serre: fd.non_quadratic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gl2::{count_unipotent, gl2_order};

    #[test]
    fn local_factor_values() {
        assert_eq!(local_factor(2), Rational::new(1, 3));
        assert_eq!(local_factor(3), Rational::new(13, 16));
        assert_eq!(local_factor(5), Rational::new(91, 96));
        assert_eq!(local_factor(2) * local_factor(3), Rational::new(13, 48));
    }

    #[test]
    fn local_factor_counts_non_unipotent_matrices() {
        for ell in [2u64, 3, 5, 7, 11, 13] {
            let total = Rational::from(gl2_order(ell));
            let lhs = local_factor(ell) * total;
            let rhs = Rational::from(gl2_order(ell) - count_unipotent(ell).unwrap());
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn constant_brackets_reference_digits() {
        let c = universal_constant(100_000);
        assert!(c.value > 0.2423 && c.value < 0.2425);
        assert!((c.value - 0.24238005).abs() < c.error_bound);
        assert_eq!(c.error_bound, 4.0 / 100_000.0);
    }

    #[test]
    fn constant_is_bit_identical_across_thread_counts() {
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| universal_constant(200_000).value)
        };
        assert_eq!(run(1).to_bits(), run(3).to_bits());
    }

    #[test]
    fn constant_is_decreasing_and_certified() {
        let coarse = universal_constant(1000);
        let fine = universal_constant(100_000);
        assert!(fine.value < coarse.value);
        assert!((coarse.value - fine.value).abs() < coarse.error_bound);
    }

    #[test]
    fn conjecture_for_reference_curves() {
        let c = universal_constant(100_000).value;

        // Delta = 37, D = 37: corrected by 1 - 37/49211.
        let e37 = WeierstrassCurve::new(0, 0, 1, -1, 0).unwrap();
        let conj = conjectural_density(&e37, 100_000);
        assert_eq!(conj.fundamental_discriminant, 37);
        assert_eq!(conj.correction, Rational::new(49_174, 49_211));
        assert!(!conj.non_serre);
        assert!((conj.density.value - c * 49_174.0 / 49_211.0).abs() < 1e-15);

        // Delta = -64, D = -4 = 0 (mod 4): exactly C.
        let e = WeierstrassCurve::new(0, 0, 0, 1, 0).unwrap();
        assert_eq!(e.delta, -64);
        let conj = conjectural_density(&e, 100_000);
        assert_eq!(conj.fundamental_discriminant, -4);
        assert_eq!(conj.correction, Rational::ONE);
        assert_eq!(conj.density.value, c);

        // Delta a perfect square: flagged, output still produced.
        let sq = WeierstrassCurve::new(0, 0, 0, -1, 0).unwrap();
        assert_eq!(sq.delta, 64);
        let conj = conjectural_density(&sq, 100_000);
        assert!(conj.non_serre);
        assert_eq!(conj.density.value, c);
    }

    #[test]
    fn example_with_dminus3_field() {
        // Delta = -432 a6^2 = -3 * (square): the corrected value is C * 10/13.
        let e = WeierstrassCurve::new(0, 0, 0, 0, -75 * 4096).unwrap();
        assert_eq!(crate::arith::fundamental_discriminant(e.delta).value, -3,);
        let conj = conjectural_density(&e, 100_000);
        assert_eq!(conj.correction, Rational::new(10, 13));
        assert!((conj.density.value - 0.18645).abs() < 1e-4);
    }

    #[test]
    fn conjecture_invariant_under_model_scaling() {
        // (x, y) -> (u^2 x, u^3 y) sends (a4, a6) to (u^4 a4, u^6 a6) and
        // multiplies Delta by u^12; D and the correction must not move.
        let base = WeierstrassCurve::new(0, 0, 0, 1, 1).unwrap();
        let c0 = conjectural_density(&base, 10_000);
        for u in [2i64, 3] {
            let scaled = WeierstrassCurve::new(0, 0, 0, u.pow(4), u.pow(6)).unwrap();
            assert_eq!(scaled.delta, base.delta * u.pow(12));
            let c = conjectural_density(&scaled, 10_000);
            assert_eq!(c.fundamental_discriminant, c0.fundamental_discriminant);
            assert_eq!(c.correction, c0.correction);
            assert_eq!(c.density.value, c0.density.value);
        }
    }

    #[test]
    fn correction_error_cases_are_unreachable_from_curves() {
        // Any nonsquare Delta yields a D handled by one of the two branches.
        for delta in [-496i64, 37, -75, 5, 8, -24] {
            let fd = fundamental_discriminant(delta);
            let r = fd.value.rem_euclid(4);
            assert!(r == 0 || r == 1);
            if r == 1 {
                assert!(correction_factor(fd.value).is_ok());
            }
        }
    }
}
