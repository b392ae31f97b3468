//! Arbitrary-precision rational helpers.
//!
//! Tolerance schedules reach scales like 2^-1701, far beyond `f64`, so all
//! exact arithmetic runs on [`num::BigRational`].

use num::bigint::BigInt;
use num::traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = num::BigRational;

/// `n / d` as a rational. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Integer as a rational.
pub fn rint(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// `base^exp` for a non-negative integer exponent.
pub fn rpow(base: &Rat, exp: u64) -> Rat {
    let mut acc = Rat::one();
    let mut sq = base.clone();
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &sq;
        }
        e >>= 1;
        if e > 0 {
            sq = &sq * &sq;
        }
    }
    acc
}

/// `2^exp` as a rational, for integer `exp` of either sign.
pub fn pow2(exp: i64) -> Rat {
    let b = BigInt::one() << exp.unsigned_abs() as usize;
    if exp >= 0 {
        Rat::from_integer(b)
    } else {
        Rat::new(BigInt::one(), b)
    }
}

/// Canonical `num/den` rendering (denominator always present, e.g. `3/1`).
pub fn rat_str(x: &Rat) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `a/b` or a bare integer `a`.
pub fn parse_rat(s: &str) -> crate::Result<Rat> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let numer: BigInt = n
        .trim()
        .parse()
        .map_err(|_| crate::Error::Parse(format!("bad rational {s:?}")))?;
    let denom: BigInt = d
        .trim()
        .parse()
        .map_err(|_| crate::Error::Parse(format!("bad rational {s:?}")))?;
    if denom.is_zero() {
        return Err(crate::Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Rat::new(numer, denom))
}

/// Nearest `f64` (saturating for out-of-range magnitudes).
pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        if x.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Natural log of a positive rational, stable even when numerator and
/// denominator individually overflow `f64`.
pub fn ln_rat(x: &Rat) -> f64 {
    assert!(x.is_positive(), "ln of non-positive rational");
    ln_big(x.numer()) - ln_big(x.denom())
}

fn ln_big(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 52 {
        return (x.to_f64().unwrap()).ln();
    }
    let shift = bits - 52;
    let top = (x >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}
