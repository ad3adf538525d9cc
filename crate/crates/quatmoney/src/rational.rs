//! Exact rational scalars.
//!
//! All arithmetic below the spectral layer is carried out in `Rat`
//! (arbitrary-precision rationals, always in lowest terms with positive
//! denominator). Floating point enters only when eigenvalues are needed.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Render as `"num/den"`, the form used in all JSON interchange.
pub fn rat_to_string(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parse `"num/den"` or a bare integer string.
pub fn rat_from_string(s: &str) -> Result<Rat> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| Error::usage(format!("bad rational numerator {s:?}")))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| Error::usage(format!("bad rational denominator {s:?}")))?;
    if den.is_zero() {
        return Err(Error::usage("rational with zero denominator"));
    }
    Ok(Rat::new(num, den))
}

/// Floor of the square root of a non-negative integer.
pub fn isqrt(n: &BigInt) -> BigInt {
    assert!(!n.is_negative(), "isqrt of negative integer");
    n.sqrt()
}

/// Exact square root of a perfect-square non-negative integer.
pub fn int_sqrt_exact(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    if &(&r * &r) == n {
        Some(r)
    } else {
        None
    }
}

/// Exact square root of a rational that is a perfect square.
pub fn rat_sqrt_exact(r: &Rat) -> Option<Rat> {
    let num = int_sqrt_exact(r.numer())?;
    let den = int_sqrt_exact(r.denom())?;
    Some(Rat::new(num, den))
}

/// `f64` approximation; the values handled here are far below overflow.
pub fn rat_to_f64(r: &Rat) -> f64 {
    let num = r.numer();
    let den = r.denom();
    match (num.to_string().parse::<f64>(), den.to_string().parse::<f64>()) {
        (Ok(n), Ok(d)) => n / d,
        _ => f64::NAN,
    }
}

/// Nearest integer to a rational (ties round toward +infinity).
pub fn rat_round(r: &Rat) -> BigInt {
    let two = BigInt::from(2);
    let shifted = r + Rat::new(BigInt::one(), two);
    shifted.floor().to_integer()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn string_round_trip() {
        let r = rat(-22, 8);
        let s = rat_to_string(&r);
        assert_eq!(s, "-11/4");
        assert_eq!(rat_from_string(&s).unwrap(), r);
        assert_eq!(rat_from_string("7").unwrap(), rat_int(7));
    }

    #[test]
    fn sqrt_exact_detects_squares() {
        assert_eq!(rat_sqrt_exact(&rat(49, 16)), Some(rat(7, 4)));
        assert_eq!(rat_sqrt_exact(&rat(2, 1)), None);
    }

    #[test]
    fn rounding() {
        assert_eq!(rat_round(&rat(5, 2)), BigInt::from(3));
        assert_eq!(rat_round(&rat(-5, 2)), BigInt::from(-2));
        assert_eq!(rat_round(&rat(7, 3)), BigInt::from(2));
    }
}
