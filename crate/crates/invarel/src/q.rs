//! Thin helpers over `num`'s arbitrary-precision rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;
pub type Z = BigInt;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Exact integer n-th root if it exists.
pub fn int_nth_root(a: &Z, n: u32) -> Option<Z> {
    if n == 0 {
        return None;
    }
    if a.is_zero() {
        return Some(Z::zero());
    }
    if a.is_negative() {
        if n % 2 == 0 {
            return None;
        }
        return int_nth_root(&-a, n).map(|r| -r);
    }
    // Newton iteration on integers.
    let bits = a.bits();
    let mut x: Z = Z::one() << ((bits / n as u64) + 1);
    let nz = Z::from(n);
    loop {
        // x_{k+1} = ((n-1)x + a / x^(n-1)) / n
        let xp = x.pow(n - 1);
        if xp.is_zero() {
            return None;
        }
        let next = ((&nz - 1) * &x + a / &xp) / &nz;
        if next >= x {
            break;
        }
        x = next;
    }
    if x.pow(n) == *a {
        Some(x)
    } else {
        None
    }
}

/// Floor of the integer square root of a nonnegative integer.
pub fn int_floor_sqrt(a: &Z) -> Z {
    use num_traits::{One, Signed, Zero};
    if a.is_negative() || a.is_zero() {
        return Z::zero();
    }
    let bits = a.bits();
    let mut x: Z = Z::one() << (bits / 2 + 1);
    loop {
        let next = (&x + a / &x) / 2;
        if next >= x {
            return x;
        }
        x = next;
    }
}

/// Exact rational n-th root if it exists.
pub fn rat_nth_root(a: &Q, n: u32) -> Option<Q> {
    let num = int_nth_root(a.numer(), n)?;
    let den = int_nth_root(a.denom(), n)?;
    Some(Q::new(num, den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nth_roots() {
        assert_eq!(int_nth_root(&Z::from(27), 3), Some(Z::from(3)));
        assert_eq!(int_nth_root(&Z::from(28), 3), None);
        assert_eq!(int_nth_root(&Z::from(-8), 3), Some(Z::from(-2)));
        assert_eq!(int_nth_root(&Z::from(-4), 2), None);
        assert_eq!(rat_nth_root(&q(25, 16), 2), Some(q(5, 4)));
        assert_eq!(rat_nth_root(&q(2, 1), 2), None);
    }
}
