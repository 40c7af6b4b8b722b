//! Exact rational helpers on top of `num_rational::BigRational`.

use alloc::format;
use alloc::string::String;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = num_rational::BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Parses an unsigned decimal literal such as `12`, `0.6` or `.25` exactly.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let (whole, frac) = match text.split_once('.') {
        Some((w, f)) => (w, f),
        None => (text, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut digits = String::with_capacity(whole.len() + frac.len());
    digits.push_str(whole);
    digits.push_str(frac);
    let num = BigInt::parse_bytes(digits.as_bytes(), 10)?;
    let den = num_traits::pow(BigInt::from(10u32), frac.len());
    Some(Rational::new(num, den))
}

/// Parses `a`, `a/b`, `-a/b` or a decimal, as used in JSON witnesses and DIMACS-like inputs.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let value = match body.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::parse_bytes(n.trim().as_bytes(), 10)?;
            let d = BigInt::parse_bytes(d.trim().as_bytes(), 10)?;
            if d.is_zero() {
                return None;
            }
            Rational::new(n, d)
        }
        None => parse_decimal(body)?,
    };
    Some(if neg { -value } else { value })
}

/// `num/den` rendering used by every serialized format.
pub fn fmt_frac(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Short human rendering: integers without a denominator.
pub fn fmt_short(q: &Rational) -> String {
    if q.is_integer() {
        format!("{}", q.numer())
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact conversion of a finite double.
pub fn from_f64(v: f64) -> Option<Rational> {
    if !v.is_finite() {
        return None;
    }
    if v == 0.0 {
        return Some(zero());
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { Sign::Minus } else { Sign::Plus };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    let m = BigInt::from_biguint(sign, BigUint::from(mant));
    Some(if exp >= 0 {
        Rational::from_integer(m << exp as usize)
    } else {
        Rational::new(m, BigInt::one() << (-exp) as usize)
    })
}

/// Rational `r` with `r <= sqrt(q) < r + 2^-bits`.
pub fn sqrt_lower(q: &Rational, bits: u32) -> Rational {
    assert!(!q.is_negative(), "square root of a negative rational");
    let scale = BigInt::one() << bits as usize;
    // sqrt(n/d) = sqrt(n*d)/d
    let n = q.numer() * q.denom() * &scale * &scale;
    let root = n.sqrt();
    Rational::new(root, q.denom() * scale)
}

/// Rational `r` with `sqrt(q) <= r < sqrt(q) + 2^-bits`.
pub fn sqrt_upper(q: &Rational, bits: u32) -> Rational {
    let lo = sqrt_lower(q, bits);
    if &lo * &lo == *q {
        return lo;
    }
    let scale = BigInt::one() << bits as usize;
    lo + Rational::new(BigInt::one(), q.denom() * scale)
}

pub fn lcm(a: &BigInt, b: &BigInt) -> BigInt {
    num_integer::Integer::lcm(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_decimal("0.6").unwrap(), ratio(3, 5));
        assert_eq!(parse_decimal("12").unwrap(), int(12));
        assert_eq!(parse_decimal(".25").unwrap(), ratio(1, 4));
        assert!(parse_decimal("1.2.3").is_none());
        assert!(parse_decimal(".").is_none());
    }

    #[test]
    fn rational_strings() {
        assert_eq!(parse_rational("-3/6").unwrap(), ratio(-1, 2));
        assert_eq!(fmt_frac(&ratio(-1, 2)), "-1/2");
        assert_eq!(fmt_frac(&int(4)), "4/1");
        assert!(parse_rational("1/0").is_none());
    }

    #[test]
    fn float_roundtrip() {
        for v in [0.1, -2.5, 1e-300, 123456.789] {
            assert_eq!(to_f64(&from_f64(v).unwrap()), v);
        }
    }

    #[test]
    fn sqrt_bounds_bracket() {
        let q = ratio(21, 100);
        let lo = sqrt_lower(&q, 30);
        let hi = sqrt_upper(&q, 30);
        assert!(&lo * &lo <= q && q <= &hi * &hi);
        assert!(&hi - &lo <= Rational::new(BigInt::one(), BigInt::one() << 30usize));
        assert_eq!(sqrt_upper(&ratio(1, 4), 30), ratio(1, 2));
    }
}
