//! Exact rational evaluation of the p-value recurrences.
//!
//! A plan node maps its child's p-value as follows, all in exact arithmetic:
//!
//! - iterate:  p' = 1 - 4(1-p)^2 / 9
//! - amplify:  p' = T_c(p), the degree-c Chebyshev polynomial (cos c*arccos p)
//! - lift:     p' = target, with mixing weight cos^2(alpha) = (1-target)/(1-p)
//!
//! The Chebyshev route keeps amplification exact: T_c has integer
//! coefficients, so rational p stays rational.
//!
//! Denominators square at each iterate/amplify step, so deep plans carry
//! fractions thousands of bits wide.  Each map below therefore builds its
//! image directly in lowest terms: the iterate image of a reduced fraction
//! is reducible only by a divisor of 36, and the amplify image shares only
//! a power of two with its denominator, so no wide gcd is ever taken.

use num::bigint::BigInt;
use num::traits::Pow;
use num::{BigUint, Integer, One, ToPrimitive, Zero};

use crate::error::Error;
use crate::plan::Plan;
use crate::rational::{check_p_range, int, ln_big, Rational};

/// gcd of a pair whose gcd is known to divide 36, read off residues mod 36.
fn gcd_dividing_36(n: &BigInt, d: &BigInt) -> u32 {
    let rn = (n.magnitude() % 36u32).to_u32().expect("residue fits");
    let rd = (d.magnitude() % 36u32).to_u32().expect("residue fits");
    num::integer::gcd(num::integer::gcd(rn, 36), num::integer::gcd(rd, 36))
}

/// One level of iteration: p' = 1 - 4(1-p)^2/9.
///
/// For reduced p = a/b the image is (9b^2 - 4(b-a)^2) / 9b^2; any common
/// prime of that pair divides b (forcing 2, with multiplicity at most 2) or
/// divides 9, so the pair is in lowest terms after a word-size gcd.
pub fn iterate_p(p: &Rational) -> Result<Rational, Error> {
    check_p_range(p)?;
    let nine_b2 = (p.denom() * p.denom()) * 9;
    let delta = p.denom() - p.numer();
    let numer = &nine_b2 - (&delta * &delta) * 4;
    let g = BigInt::from(gcd_dividing_36(&numer, &nine_b2));
    Ok(Rational::new_raw(numer / &g, nine_b2 / &g))
}

/// Amplification by an integer factor c >= 2: the degree-c Chebyshev
/// polynomial of p, via T_0 = 1, T_1 = p, T_n = 2p T_{n-1} - T_{n-2}.
///
/// The recurrence runs on the scaled integers N_k = b^k T_k(a/b), where it
/// reads N_{k+1} = 2a N_k - b^2 N_{k-1}.  Every odd prime of b leaves
/// N_c = 2^(c-1) a^c modulo itself, so gcd(N_c, b^c) is a power of two.
pub fn amplify_p(p: &Rational, factor: u32) -> Result<Rational, Error> {
    if factor < 2 {
        return Err(Error::BadAmplifyFactor(factor as u64));
    }
    check_p_range(p)?;
    let two_a = p.numer() * 2;
    let b2 = p.denom() * p.denom();
    let mut prev = BigInt::one();
    let mut cur = p.numer().clone();
    for _ in 1..factor {
        let next = &two_a * &cur - &b2 * &prev;
        prev = cur;
        cur = next;
    }
    if cur.is_zero() {
        return Ok(Rational::zero());
    }
    let denom = Pow::pow(p.denom(), factor);
    let shift = cur
        .trailing_zeros()
        .unwrap_or(0)
        .min(denom.trailing_zeros().unwrap_or(0));
    Ok(Rational::new_raw(cur >> shift, denom >> shift))
}

/// Result of a lift: the new p-value together with the squared cosine of the
/// mixing angle, which the simulator needs to build the lifted start state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftMix {
    pub p_out: Rational,
    pub cos2_alpha: Rational,
}

/// Ancilla mixing: raises p to any `target` in `(p, 1]` with no extra
/// queries; cos^2(alpha) = (1 - target) / (1 - p).
///
/// With target = t/d and p = a/b reduced, both differences d - t and b - a
/// are already coprime to their denominators, so the quotient reduces by
/// exactly gcd(d - t, b - a) * gcd(b, d).
pub fn lift_p(p: &Rational, target: &Rational) -> Result<LiftMix, Error> {
    check_p_range(p)?;
    if p.is_one() {
        return Err(Error::LiftFromOne);
    }
    if target <= p || *target > Rational::one() {
        return Err(Error::BadLiftTarget {
            target: target.to_string(),
            child_p: p.to_string(),
        });
    }
    let d_minus_t = target.denom() - target.numer();
    let cos2 = if d_minus_t.is_zero() {
        Rational::zero()
    } else {
        let b_minus_a = p.denom() - p.numer();
        let g1 = gcd_skipping_units(&d_minus_t, &b_minus_a);
        let g2 = gcd_skipping_units(p.denom(), target.denom());
        Rational::new_raw(
            (d_minus_t / &g1) * (p.denom() / &g2),
            (target.denom() / &g2) * (b_minus_a / &g1),
        )
    };
    Ok(LiftMix {
        p_out: target.clone(),
        cos2_alpha: cos2,
    })
}

/// gcd that returns without scanning when either operand is a unit.
fn gcd_skipping_units(x: &BigInt, y: &BigInt) -> BigInt {
    if x.is_one() || y.is_one() {
        BigInt::one()
    } else {
        x.gcd(y)
    }
}

/// Folds the recurrences bottom-up over a plan; the base plan (-1)-computes.
pub fn plan_p(plan: &Plan) -> Result<Rational, Error> {
    match plan {
        Plan::Base => Ok(int(-1)),
        Plan::Iterate(child) => iterate_p(&plan_p(child)?),
        Plan::Amplify { factor, child } => amplify_p(&plan_p(child)?, *factor),
        Plan::Lift { target, child } => Ok(lift_p(&plan_p(child)?, target)?.p_out),
    }
}

/// Query exponent of a (-1)-computing plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent {
    /// k^(1/d): the base of the asymptotic query bound.
    pub query_root: f64,
    /// log_3(k)/d: the exponent relative to the deterministic complexity.
    pub over_deterministic: f64,
}

/// Computes k^(1/d) for a plan with k queries at depth d, requiring
/// p(plan) = -1 exactly and d >= 1.
pub fn exponent(plan: &Plan) -> Result<Exponent, Error> {
    let p = plan_p(plan)?;
    if p != int(-1) {
        return Err(Error::NotMinusOneComputing(p.to_string()));
    }
    let depth = plan.depth();
    if depth == 0 {
        return Err(Error::DepthZero);
    }
    Ok(exponent_of(&plan.queries(), depth))
}

/// Exponent from raw (queries, depth), stable for very large query counts.
pub fn exponent_of(queries: &BigUint, depth: u32) -> Exponent {
    debug_assert!(depth >= 1 && !queries.is_zero());
    let ln_k = ln_big(queries);
    Exponent {
        query_root: (ln_k / depth as f64).exp(),
        over_deterministic: ln_k / (depth as f64 * 3f64.ln()),
    }
}
