//! Exact rational values.
//!
//! Every value on the invariant path (alpha, m, degree logs) is an exact
//! `BigRational`; floating point only ever appears in convergence tolerance
//! checks, never in a computed value.

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive, Zero};

pub use num_rational::BigRational;

/// Rational from an integer pair, reduced, denominator positive.
pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Rational equal to an integer.
pub fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Render as `p/q` (plain `p` when the denominator is 1).
pub fn rat_string(r: &BigRational) -> String {
    r.to_string()
}

/// Decimal rendering with a fixed number of digits, for report mirrors of
/// the exact `p/q` strings.
pub fn rat_decimal(r: &BigRational, digits: usize) -> String {
    let sign = if r.is_negative() { "-" } else { "" };
    let abs = r.abs();
    let int = abs.to_integer();
    let mut frac = abs.fract();
    let mut out = format!("{sign}{int}.");
    for _ in 0..digits {
        frac *= BigRational::from_integer(BigInt::from(10));
        let digit = frac.to_integer();
        out.push_str(&digit.to_string());
        frac = frac.fract();
    }
    out
}

/// `f64` approximation; falls back to a bit-length estimate far outside the
/// `f64` range (only used for display and tolerance checks).
pub fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let num_bits = r.numer().bits() as f64;
        let den_bits = r.denom().bits() as f64;
        let sign = if r.is_negative() { -1.0 } else { 1.0 };
        sign * ((num_bits - den_bits) * std::f64::consts::LN_2).exp()
    })
}

/// Serde helpers rendering exact values as decimal / `p/q` strings, which
/// is the wire format for every report.
pub mod serde_exact {
    use super::*;
    use serde::Serializer;

    pub fn rational<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn rational_opt<S: Serializer>(r: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&r.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn biguint<S: Serializer>(n: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&n.to_string())
    }

    pub fn biguint_vec<S: Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|n| n.to_string()))
    }
}

/// Natural log of a positive big integer, for unit-part corrections.
pub fn ln_biguint(n: &BigUint) -> f64 {
    debug_assert!(!n.is_zero());
    match n.to_f64() {
        Some(x) if x.is_finite() && x > 0.0 => x.ln(),
        _ => {
            // n has more bits than f64 can hold: ln(n) = ln(msb window) + shift*ln2
            let bits = n.bits();
            let shift = bits.saturating_sub(53);
            let top = (n >> shift).to_f64().unwrap_or(f64::MAX);
            top.ln() + shift as f64 * std::f64::consts::LN_2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_integers_without_denominator() {
        assert_eq!(rat_string(&rat(4, 2)), "2");
        assert_eq!(rat_string(&rat(4, 7)), "4/7");
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(rat_decimal(&rat(4, 7), 6), "0.571428");
        assert_eq!(rat_decimal(&rat(-3, 2), 3), "-1.500");
    }

    #[test]
    fn ln_of_large_integer() {
        let n = BigUint::from(3u32).pow(200);
        let expect = 200.0 * 3.0f64.ln();
        assert!((ln_biguint(&n) - expect).abs() < 1e-6);
    }
}
