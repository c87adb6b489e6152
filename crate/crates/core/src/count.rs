//! Point counting over F_p: a slow exact character-sum oracle and a fast
//! baby-step/giant-step path that pins #E(F_p) inside the Hasse interval,
//! plus the anomalous-prime predicate.

use std::collections::HashMap;

use crate::arith::{factorize, gcd, mul_mod};
use crate::curve::{CurvePoint, ReducedCurve};

/// Above this prime the survey switches from the character sum to BSGS.
pub const BSGS_THRESHOLD: u64 = 1000;

/// How the cardinality was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMethod {
    NaiveEnum,
    CharSum,
    Bsgs,
}

impl std::fmt::Display for CountMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CountMethod::NaiveEnum => "NaiveEnum",
            CountMethod::CharSum => "CharSum",
            CountMethod::Bsgs => "BSGS",
        })
    }
}

/// Trace of Frobenius and the point count N = p + 1 - a_p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceResult {
    pub p: u64,
    pub ap: i64,
    pub cardinality: u64,
    pub method: CountMethod,
}

impl TraceResult {
    fn new(p: u64, cardinality: u64, method: CountMethod) -> TraceResult {
        let ap = p as i64 + 1 - cardinality as i64;
        // Hasse: a_p^2 < 4p, strictly.
        assert!(
            (ap as i128) * (ap as i128) < 4 * p as i128,
            "Hasse bound violated at p={p}: ap={ap}"
        );
        TraceResult {
            p,
            ap,
            cardinality,
            method,
        }
    }
}

/// Exact count by enumeration (p <= 3) or the quadratic character sum
/// a_p = -sum_x chi(x^3 + ax + b) with a precomputed residue table.
pub fn count_points_naive(e: &ReducedCurve) -> TraceResult {
    let p = e.p();
    match *e {
        ReducedCurve::General { .. } => {
            let n = e.enumerate_points().len() as u64;
            TraceResult::new(p, n, CountMethod::NaiveEnum)
        }
        ReducedCurve::Short { a, b, .. } => {
            let mut is_square = vec![false; p as usize];
            let mut x = 0u64;
            while x <= p / 2 {
                is_square[mul_mod(x, x, p) as usize] = true;
                x += 1;
            }
            let mut chi_sum: i64 = 0;
            for x in 0..p {
                let rhs = (mul_mod(mul_mod(x, x, p), x, p) + mul_mod(a, x, p) + b) % p;
                if rhs != 0 {
                    chi_sum += if is_square[rhs as usize] { 1 } else { -1 };
                }
            }
            let n = (p as i64 + 1 + chi_sum) as u64;
            TraceResult::new(p, n, CountMethod::CharSum)
        }
    }
}

/// Anomalous primes are those with p | #E(F_p); for p >= 7 the Hasse bound
/// forces this to mean a_p = 1 exactly.
pub fn is_anomalous(tr: &TraceResult) -> bool {
    if tr.p >= 7 {
        tr.ap == 1
    } else {
        tr.cardinality.is_multiple_of(tr.p)
    }
}

/// Integer endpoints of the open Hasse interval (p+1-2*sqrt(p), p+1+2*sqrt(p)).
/// For prime p, 4p is never a square, so the admissible counts are exactly
/// [p+1-t, p+1+t] with t = floor(2*sqrt(p)).
fn hasse_range(p: u64) -> (u64, u64) {
    let t = (4 * p).isqrt();
    debug_assert!(t * t != 4 * p);
    (p + 1 - t, p + 1 + t)
}

/// Order of `pt`, found by locating one annihilating multiple in
/// [lo, hi] via baby-step/giant-step and stripping primes off it.
fn point_order(e: &ReducedCurve, pt: CurvePoint, lo: u64, hi: u64) -> u64 {
    if pt == CurvePoint::Infinity {
        return 1;
    }
    let width = hi - lo + 1;
    let g = width.isqrt() + 1;
    // Baby steps: j |-> jP for j in 1..g.
    let mut table: HashMap<CurvePoint, u64> = HashMap::with_capacity(g as usize);
    let mut walk = CurvePoint::Infinity;
    for j in 1..=g {
        walk = e.add(walk, pt);
        if walk == CurvePoint::Infinity {
            // Small order found directly.
            return j;
        }
        table.entry(walk).or_insert(j);
    }
    let giant = e.scalar_mul(g, pt);
    let mut current = e.scalar_mul(lo, pt);
    let mut annihilator = None;
    let mut i = 0u64;
    loop {
        let m = lo + i * g;
        if m > hi + g {
            break;
        }
        if current == CurvePoint::Infinity {
            annihilator = Some(m);
            break;
        }
        if let Some(&j) = table.get(&e.negate(current)) {
            annihilator = Some(m + j);
            break;
        }
        current = e.add(current, giant);
        i += 1;
    }
    let mut order = annihilator.expect("group order lies in the Hasse interval");
    // Strip primes: order stays a multiple of ord(P) throughout.
    let f = factorize(order as i64).expect("nonzero");
    for q in f.primes() {
        while order % q == 0 && e.scalar_mul(order / q, pt) == CurvePoint::Infinity {
            order /= q;
        }
    }
    order
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// Multiples of `l` in [lo, hi].
fn multiples_in(l: u64, lo: u64, hi: u64) -> impl Iterator<Item = u64> {
    let first = lo.div_ceil(l);
    let last = hi / l;
    (first..=last).map(move |k| k * l)
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Exponent-accumulation state for one curve: the lcm of sampled point
/// orders, together with the surviving candidates for the group order.
struct OrderSearch<'a> {
    e: &'a ReducedCurve,
    lo: u64,
    hi: u64,
    lcm_orders: u64,
    seed: u64,
    samples: u64,
}

impl<'a> OrderSearch<'a> {
    fn new(e: &'a ReducedCurve, seed: u64) -> OrderSearch<'a> {
        let (lo, hi) = hasse_range(e.p());
        OrderSearch {
            e,
            lo,
            hi,
            lcm_orders: 1,
            seed,
            samples: 0,
        }
    }

    fn add_sample(&mut self) -> bool {
        let pt = match self.e.random_point(splitmix(self.seed ^ self.samples)) {
            Ok(pt) => pt,
            Err(_) => return false,
        };
        self.samples += 1;
        let order = point_order(self.e, pt, self.lo, self.hi);
        self.lcm_orders = lcm(self.lcm_orders, order);
        true
    }

    fn candidates(&self) -> Vec<u64> {
        multiples_in(self.lcm_orders, self.lo, self.hi).collect()
    }
}

const MAX_SAMPLES_PER_SIDE: u64 = 8;

/// #E(F_p) for p > BSGS_THRESHOLD: accumulate the lcm of random point
/// orders until a unique multiple survives in the Hasse interval; if the
/// curve's exponent is too small, combine with the quadratic twist (whose
/// count is 2p + 2 - N); fall back to the character sum as a last resort.
pub fn count_points_bsgs(e: &ReducedCurve, seed: u64) -> TraceResult {
    let p = e.p();
    let (a, b) = match *e {
        ReducedCurve::Short { a, b, .. } => (a, b),
        ReducedCurve::General { .. } => return count_points_naive(e),
    };
    let mixed = splitmix(seed ^ splitmix(p) ^ splitmix(a) ^ splitmix(b.wrapping_add(1)));

    let mut search = OrderSearch::new(e, mixed);
    for _ in 0..MAX_SAMPLES_PER_SIDE {
        if !search.add_sample() {
            return count_points_naive(e);
        }
        let cands = search.candidates();
        if cands.len() == 1 {
            return TraceResult::new(p, cands[0], CountMethod::Bsgs);
        }
    }

    // Twist by the smallest non-residue d: y^2 = x^3 + a d^2 x + b d^3.
    let d = (2..p)
        .find(|&d| crate::arith::legendre(d as i64, p) == -1)
        .expect("non-residue exists");
    let twist = ReducedCurve::Short {
        p,
        a: mul_mod(a, mul_mod(d, d, p), p),
        b: mul_mod(b, mul_mod(mul_mod(d, d, p), d, p), p),
    };
    let mut twist_search = OrderSearch::new(&twist, splitmix(mixed));
    for _ in 0..MAX_SAMPLES_PER_SIDE {
        if !twist_search.add_sample() {
            return count_points_naive(e);
        }
        // N must be a multiple of the curve exponent and 2p+2-N a multiple
        // of the twist exponent.
        let joint: Vec<u64> = search
            .candidates()
            .into_iter()
            .filter(|&m| (2 * p + 2 - m).is_multiple_of(twist_search.lcm_orders))
            .collect();
        if joint.len() == 1 {
            return TraceResult::new(p, joint[0], CountMethod::Bsgs);
        }
        if !search.add_sample() {
            return count_points_naive(e);
        }
    }
    count_points_naive(e)
}

/// Dispatch: enumeration below the threshold, BSGS above.
pub fn count_points(e: &ReducedCurve, seed: u64) -> TraceResult {
    if e.p() > BSGS_THRESHOLD {
        count_points_bsgs(e, seed)
    } else {
        count_points_naive(e)
    }
}
