//! Exact rationals with a machine-word fast path, for the simplex tableau.

use alloc::boxed::Box;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::rational::Rational;

/// `Small(n, d)` is reduced with `d > 0`; values that do not fit are kept as `Big`.
#[derive(Clone, Debug)]
pub(crate) enum Q {
    Small(i64, i64),
    Big(Box<Rational>),
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            core::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

impl Q {
    pub const ZERO: Q = Q::Small(0, 1);
    pub const ONE: Q = Q::Small(1, 1);

    /// `n/d` for `d != 0`, both at most 127 bits in magnitude.
    fn ratio(n: i128, d: i128) -> Q {
        let (mut n, mut d) = if d < 0 { (-n, -d) } else { (n, d) };
        let g = gcd(n.unsigned_abs(), d as u128) as i128;
        if g > 1 {
            n /= g;
            d /= g;
        }
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(a), Ok(b)) => Q::Small(a, b),
            _ => Q::Big(Box::new(Rational::new_raw(BigInt::from(n), BigInt::from(d)))),
        }
    }

    pub fn from_rational(q: &Rational) -> Q {
        match (q.numer().to_i64(), q.denom().to_i64()) {
            (Some(n), Some(d)) => Q::Small(n, d),
            _ => Q::Big(Box::new(q.clone())),
        }
    }

    fn from_big(q: Rational) -> Q {
        match (q.numer().to_i64(), q.denom().to_i64()) {
            (Some(n), Some(d)) => Q::Small(n, d),
            _ => Q::Big(Box::new(q)),
        }
    }

    pub fn to_rational(&self) -> Rational {
        match self {
            Q::Small(n, d) => Rational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Q::Big(q) => (**q).clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Q::Small(n, _) => *n == 0,
            Q::Big(q) => q.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Q::Small(n, d) => *n == 1 && *d == 1,
            Q::Big(q) => q.is_one(),
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Q::Small(n, _) => *n > 0,
            Q::Big(q) => q.is_positive(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Q::Small(n, _) => *n < 0,
            Q::Big(q) => q.is_negative(),
        }
    }

    pub fn add(&self, o: &Q) -> Q {
        match (self, o) {
            (Q::Small(a, b), Q::Small(c, d)) => {
                if b == d {
                    Q::ratio(*a as i128 + *c as i128, *b as i128)
                } else {
                    Q::ratio(*a as i128 * *d as i128 + *c as i128 * *b as i128, *b as i128 * *d as i128)
                }
            }
            _ => Q::from_big(self.to_rational() + o.to_rational()),
        }
    }

    pub fn sub(&self, o: &Q) -> Q {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Q {
        match self {
            Q::Small(a, b) => match a.checked_neg() {
                Some(n) => Q::Small(n, *b),
                None => Q::ratio(-(*a as i128), *b as i128),
            },
            Q::Big(q) => Q::from_big(-(**q).clone()),
        }
    }

    pub fn mul(&self, o: &Q) -> Q {
        match (self, o) {
            (Q::Small(a, b), Q::Small(c, d)) => Q::ratio(*a as i128 * *c as i128, *b as i128 * *d as i128),
            _ => Q::from_big(self.to_rational() * o.to_rational()),
        }
    }

    /// Panics on division by zero.
    pub fn div(&self, o: &Q) -> Q {
        match (self, o) {
            (Q::Small(a, b), Q::Small(c, d)) => {
                assert!(*c != 0, "division by zero");
                Q::ratio(*a as i128 * *d as i128, *b as i128 * *c as i128)
            }
            _ => Q::from_big(self.to_rational() / o.to_rational()),
        }
    }

    pub fn cmp(&self, o: &Q) -> Ordering {
        match (self, o) {
            (Q::Small(a, b), Q::Small(c, d)) => (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128)),
            _ => self.to_rational().cmp(&o.to_rational()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn q(n: i64, d: i64) -> Q {
        Q::from_rational(&ratio(n, d))
    }

    #[test]
    fn arithmetic_matches_big_rationals() {
        let vals = [q(0, 1), q(1, 1), q(-3, 7), q(22, 6), q(i64::MAX, 3), q(i64::MIN + 1, 5), q(1, i64::MAX)];
        for a in &vals {
            for b in &vals {
                let (x, y) = (a.to_rational(), b.to_rational());
                assert_eq!(a.add(b).to_rational(), &x + &y);
                assert_eq!(a.sub(b).to_rational(), &x - &y);
                assert_eq!(a.mul(b).to_rational(), &x * &y);
                assert_eq!(a.cmp(b), x.cmp(&y));
                if !b.is_zero() {
                    assert_eq!(a.div(b).to_rational(), &x / &y);
                }
            }
        }
    }

    #[test]
    fn overflow_promotes_and_shrinks_back() {
        let big = q(i64::MAX, 1).mul(&q(i64::MAX, 1));
        assert!(matches!(big, Q::Big(_)));
        let back = big.div(&q(i64::MAX, 1));
        assert!(matches!(back, Q::Small(_, 1)));
        assert_eq!(back.to_rational(), int(i64::MAX));
        assert!(matches!(Q::Small(i64::MIN, 1).neg(), Q::Big(_)));
    }
}
