//! Density of primes p with gcd(#E(F_p), p - 1) = 1 for an elliptic curve
//! over Q.
//!
//! The heuristic model: the local obstruction at a prime ell (ell | p - 1
//! and ell | #E(F_p)) corresponds, through the mod-ell Galois image, to the
//! Frobenius matrix being unipotent in GL2(F_ell), an event of exact
//! density ell / ((ell-1)^2 (ell+1)). Multiplying the complements over all
//! ell gives a universal constant C = 0.2423...; for curves with maximal
//! adelic image the only deviation from independence is the quadratic
//! entanglement between the 2-division field and the cyclotomic layer,
//! which contributes a rational correction factor determined by the
//! fundamental discriminant of Q(sqrt(Delta)).
//!
//! The crate computes all of this exactly (rationals, exhaustive GL2
//! enumeration), estimates C with a certified truncation bound, and checks
//! the prediction against an empirical survey with fast point counting.

pub mod arith;
pub mod conjecture;
pub mod count;
pub mod curve;
pub mod entangle;
pub mod gl2;
pub mod rational;
pub mod survey;

pub use conjecture::{conjectural_density, universal_constant, ConstantEstimate, CurveConjecture};
pub use count::{count_points, count_points_bsgs, count_points_naive, CountMethod, TraceResult};
pub use curve::{CurvePoint, ReducedCurve, WeierstrassCurve};
pub use entangle::{enumerate_density, EntangleSpec, EnumerationStrategy};
pub use gl2::Mat2;
pub use rational::Rational;
pub use survey::{run_survey, SurveyConfig, SurveyReport};
