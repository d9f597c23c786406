//! Truncated power series over Q, used for exact germ evaluation and limits
//! along cross-section transversals. A `Series` of length n represents the
//! value modulo t^n; operations shrink the length where precision is lost.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::q::{rat_nth_root, Q, Z};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Series {
    pub c: Vec<Q>,
}

impl Series {
    pub fn constant(v: Q, n: usize) -> Self {
        let mut c = vec![Q::zero(); n];
        if n > 0 {
            c[0] = v;
        }
        Series { c }
    }

    pub fn zero(n: usize) -> Self {
        Series { c: vec![Q::zero(); n] }
    }

    pub fn t(n: usize) -> Self {
        let mut c = vec![Q::zero(); n];
        if n > 1 {
            c[1] = Q::one();
        }
        Series { c }
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn truncate(&self, n: usize) -> Series {
        Series {
            c: self.c.iter().take(n).cloned().collect(),
        }
    }

    pub fn at0(&self) -> Q {
        self.c.first().cloned().unwrap_or_else(Q::zero)
    }

    pub fn valuation(&self) -> Option<usize> {
        self.c.iter().position(|x| !x.is_zero())
    }

    pub fn is_zero_all(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }

    pub fn add(&self, other: &Series) -> Series {
        let n = self.len().min(other.len());
        Series {
            c: (0..n).map(|i| &self.c[i] + &other.c[i]).collect(),
        }
    }

    pub fn neg(&self) -> Series {
        Series {
            c: self.c.iter().map(|x| -x).collect(),
        }
    }

    pub fn sub(&self, other: &Series) -> Series {
        self.add(&other.neg())
    }

    pub fn scale(&self, q: &Q) -> Series {
        Series {
            c: self.c.iter().map(|x| x * q).collect(),
        }
    }

    pub fn mul(&self, other: &Series) -> Series {
        let n = self.len().min(other.len());
        let mut c = vec![Q::zero(); n];
        for i in 0..n {
            if self.c[i].is_zero() {
                continue;
            }
            for j in 0..n - i {
                if !other.c[j].is_zero() {
                    c[i + j] += &self.c[i] * &other.c[j];
                }
            }
        }
        Series { c }
    }

    pub fn pow(&self, k: u32) -> Series {
        let mut acc = Series::constant(Q::one(), self.len());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Multiplicative inverse; requires nonzero constant term.
    pub fn inverse(&self) -> Result<Series> {
        if self.at0().is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = self.len();
        let a0inv = Q::one() / self.at0();
        let mut inv = vec![Q::zero(); n];
        inv[0] = a0inv.clone();
        for k in 1..n {
            let mut s = Q::zero();
            for j in 1..=k {
                s += &self.c[j] * &inv[k - j];
            }
            inv[k] = -s * &a0inv;
        }
        Ok(Series { c: inv })
    }

    /// Division with valuation shift: num/den where valuation(num) >=
    /// valuation(den). The result length shrinks by the denominator's
    /// valuation.
    pub fn div(&self, other: &Series) -> Result<Series> {
        let vd = other.valuation().ok_or(Error::DivisionByZero)?;
        if vd == 0 {
            return Ok(self.mul(&other.inverse()?));
        }
        let vn = self.valuation();
        match vn {
            None => Ok(Series::zero(self.len().saturating_sub(vd))),
            Some(vn) if vn >= vd => {
                let num = Series {
                    c: self.c[vd..].to_vec(),
                };
                let den = Series {
                    c: other.c[vd..].to_vec(),
                };
                Ok(num.mul(&den.inverse()?))
            }
            _ => Err(Error::DivisionByZero),
        }
    }

    /// d/dt; the result is one order shorter.
    pub fn derivative(&self) -> Series {
        if self.len() <= 1 {
            return Series::zero(0);
        }
        Series {
            c: (1..self.len())
                .map(|k| &self.c[k] * Q::from_integer(Z::from(k as u64)))
                .collect(),
        }
    }

    /// Exact n-th root. The valuation must be divisible by n and the leading
    /// coefficient must be an exact n-th power; negative leading values are
    /// allowed for odd n.
    pub fn nth_root(&self, n: u32, hint: Option<&Q>) -> Result<Series> {
        let v = match self.valuation() {
            None => return Ok(Series::zero(self.len())),
            Some(v) => v,
        };
        if v % n as usize != 0 {
            return Err(Error::NoExactRoot("series".into(), n));
        }
        let body = Series {
            c: self.c[v..].to_vec(),
        };
        let a0 = body.at0();
        let mut r0 = match hint {
            Some(h) if h.pow(n as i32) == a0 => h.clone(),
            _ => rat_nth_root(&a0, n).ok_or(Error::NoExactRoot("series".into(), n))?,
        };
        if let Some(h) = hint {
            if h.is_negative() && (-&r0).pow(n as i32) == a0 {
                r0 = -r0;
            }
        }
        // Newton-style coefficient recursion: determine root term by term.
        let m = body.len();
        let mut root = Series::constant(r0.clone(), m);
        for k in 1..m {
            // coefficient of t^k in root^n must match body[k]
            let cur = root.pow(n);
            let defect = &body.c[k] - &cur.c[k];
            if defect.is_zero() {
                continue;
            }
            // d/d(c_k) [root^n]_k = n * r0^(n-1)
            let denom = Q::from_integer(Z::from(n)) * r0.pow((n - 1) as i32);
            root.c[k] = defect / denom;
        }
        debug_assert!(root.pow(n).sub(&body).is_zero_all());
        let shift = v / n as usize;
        let mut c = vec![Q::zero(); shift];
        c.extend(root.c.iter().take(m.saturating_sub(shift)).cloned());
        Ok(Series { c })
    }

    /// Substitute another series (with zero constant term) for t.
    pub fn compose(&self, inner: &Series) -> Result<Series> {
        if !inner.at0().is_zero() {
            return Err(Error::NotPolynomial(
                "composition requires zero constant term".into(),
            ));
        }
        let n = self.len().min(inner.len());
        let mut acc = Series::zero(n);
        let mut p = Series::constant(Q::one(), n);
        for k in 0..n {
            if !self.c[k].is_zero() {
                acc = acc.add(&p.scale(&self.c[k]));
            }
            if k + 1 < n {
                p = p.mul(inner);
            }
        }
        Ok(acc)
    }

    /// Compositional inverse: find g with f(g(t)) = t. Requires f(0) = 0 and
    /// f'(0) != 0.
    pub fn reversion(&self) -> Result<Series> {
        if !self.at0().is_zero() {
            return Err(Error::NotPolynomial("reversion requires f(0)=0".into()));
        }
        let n = self.len();
        if n < 2 || self.c[1].is_zero() {
            return Err(Error::DivisionByZero);
        }
        let c1inv = Q::one() / self.c[1].clone();
        // fixed point iteration g = (t - (f - c1 t)(g)) / c1, gaining one
        // correct order per pass
        let mut g = Series::t(n).scale(&c1inv);
        let tail = {
            let mut c = self.c.clone();
            c[1] = Q::zero();
            Series { c }
        };
        for _ in 0..n {
            let t = Series::t(n);
            let sub = tail.compose(&g)?;
            g = t.sub(&sub).scale(&c1inv);
        }
        debug_assert!({
            let check = self.compose(&g).unwrap();
            check.sub(&Series::t(n)).is_zero_all()
        });
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::q::{q, qi};

    #[test]
    fn series_sqrt_and_inverse() {
        // (1 + t)^2 = 1 + 2t + t^2
        let s = Series {
            c: vec![qi(1), qi(2), qi(1), qi(0), qi(0)],
        };
        let r = s.nth_root(2, None).unwrap();
        assert_eq!(r.c[0], qi(1));
        assert_eq!(r.c[1], qi(1));
        assert_eq!(r.c[2], qi(0));

        let inv = s.inverse().unwrap();
        assert_eq!(inv.c[0], qi(1));
        assert_eq!(inv.c[1], qi(-2));
        assert_eq!(inv.c[2], qi(3));
    }

    #[test]
    fn series_reversion() {
        // f = 2t + t^2, g with f(g) = t
        let f = Series {
            c: vec![qi(0), qi(2), qi(1), qi(0), qi(0), qi(0)],
        };
        let g = f.reversion().unwrap();
        assert_eq!(g.c[1], q(1, 2));
        let check = f.compose(&g).unwrap();
        assert_eq!(check.c[1], qi(1));
        assert!(check.c[2].is_zero() && check.c[3].is_zero());
    }
}
