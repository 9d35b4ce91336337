//! Exact arbitrary-precision rationals used for p-values and query counts.
//!
//! Backed by [`num::BigRational`], which keeps values in canonical form
//! (reduced, denominator positive) through every operation.

use num::bigint::BigInt;
use num::{BigRational, BigUint, Signed, ToPrimitive, Zero};

use crate::error::Error;

pub type Rational = BigRational;

/// Shorthand for constructing a rational from small integers.
pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from(BigInt::from(value))
}

/// True iff the value lies in the closed interval [-1, 1].
pub fn in_unit_interval(p: &Rational) -> bool {
    // canonical form keeps the denominator positive, so compare magnitudes
    p.numer().magnitude() <= p.denom().magnitude()
}

pub fn check_p_range(p: &Rational) -> Result<(), Error> {
    if in_unit_interval(p) {
        Ok(())
    } else {
        Err(Error::POutOfRange(p.to_string()))
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    // Falls back to a bit-length split when numerator/denominator overflow f64.
    r.to_f64().unwrap_or_else(|| {
        let sign = if r.is_negative() { -1.0 } else { 1.0 };
        sign * (ln_big(r.numer().magnitude()) - ln_big(r.denom().magnitude())).exp()
    })
}

/// Natural log of a positive big integer, stable for values far beyond f64 range.
pub fn ln_big(n: &BigUint) -> f64 {
    debug_assert!(!n.is_zero());
    let bits = n.bits();
    if bits <= 53 {
        return (n.to_f64().expect("fits in f64")).ln();
    }
    let shift = bits - 53;
    let top: BigUint = n >> shift;
    (top.to_f64().expect("53 bits fit")).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Formats a float with the given number of significant digits, in plain
/// decimal notation (trace tables and CLI output use 6 or 7 digits).
pub fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let places = (sig as i32 - 1 - magnitude).clamp(0, 17) as usize;
    format!("{x:.places$}")
}
