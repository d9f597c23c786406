//! Sparse multivariate polynomials over Q, ordered lexicographically.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::expr::ctx::Var;
use crate::q::{Q, Z};

/// A monomial: sorted `(var, exponent)` pairs with positive exponents.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Mono(pub Vec<(Var, u32)>);

impl Mono {
    pub fn one() -> Self {
        Mono(Vec::new())
    }

    pub fn var(v: Var) -> Self {
        Mono(vec![(v, 1)])
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exp(&self, v: Var) -> u32 {
        self.0
            .iter()
            .find(|(w, _)| *w == v)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            match (self.0.get(i), other.0.get(j)) {
                (Some(&(va, ea)), Some(&(vb, eb))) => match va.cmp(&vb) {
                    Ordering::Less => {
                        out.push((va, ea));
                        i += 1;
                    }
                    Ordering::Greater => {
                        out.push((vb, eb));
                        j += 1;
                    }
                    Ordering::Equal => {
                        out.push((va, ea + eb));
                        i += 1;
                        j += 1;
                    }
                },
                (Some(&t), None) => {
                    out.push(t);
                    i += 1;
                }
                (None, Some(&t)) => {
                    out.push(t);
                    j += 1;
                }
                (None, None) => break,
            }
        }
        Mono(out)
    }

    /// Exact division; `None` if some exponent would go negative.
    pub fn div(&self, other: &Mono) -> Option<Mono> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for &(v, e) in &self.0 {
            let mut e = e as i64;
            while j < other.0.len() && other.0[j].0 < v {
                return None; // divisor has a var we lack
            }
            if j < other.0.len() && other.0[j].0 == v {
                e -= other.0[j].1 as i64;
                j += 1;
            }
            if e < 0 {
                return None;
            }
            if e > 0 {
                out.push((v, e as u32));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Mono(out))
    }

    pub fn gcd(&self, other: &Mono) -> Mono {
        let mut out = Vec::new();
        let mut j = 0;
        for &(v, e) in &self.0 {
            while j < other.0.len() && other.0[j].0 < v {
                j += 1;
            }
            if j < other.0.len() && other.0[j].0 == v {
                out.push((v, e.min(other.0[j].1)));
            }
        }
        Mono(out)
    }

    pub fn pow(&self, k: u32) -> Mono {
        Mono(self.0.iter().map(|&(v, e)| (v, e * k)).collect())
    }

    pub fn without(&self, v: Var) -> Mono {
        Mono(self.0.iter().filter(|(w, _)| *w != v).cloned().collect())
    }

    /// Lexicographic order: smaller `Var` id is more significant, a higher
    /// exponent on the most significant differing variable wins.
    pub fn lex_cmp(&self, other: &Mono) -> Ordering {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some(&(va, ea)), Some(&(vb, eb))) => match va.cmp(&vb) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if ea != eb {
                            return ea.cmp(&eb);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

/// Polynomial as a descending-ordered term list; leading term first.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Poly {
    pub terms: Vec<(Mono, Q)>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly {
                terms: vec![(Mono::one(), c)],
            }
        }
    }

    pub fn var(v: Var) -> Self {
        Poly {
            terms: vec![(Mono::var(v), Q::one())],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    pub fn as_constant(&self) -> Option<Q> {
        if self.is_zero() {
            Some(Q::zero())
        } else if self.is_constant() {
            Some(self.terms[0].1.clone())
        } else {
            None
        }
    }

    pub fn from_terms(terms: Vec<(Mono, Q)>) -> Self {
        let mut map: BTreeMap<Vec<(Var, u32)>, Q> = BTreeMap::new();
        for (m, c) in terms {
            let e = map.entry(m.0).or_insert_with(Q::zero);
            *e += c;
        }
        let mut terms: Vec<(Mono, Q)> = map
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, c)| (Mono(m), c))
            .collect();
        terms.sort_by(|a, b| b.0.lex_cmp(&a.0));
        Poly { terms }
    }

    pub fn leading(&self) -> Option<&(Mono, Q)> {
        self.terms.first()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            match (self.terms.get(i), other.terms.get(j)) {
                (Some((ma, ca)), Some((mb, cb))) => match ma.lex_cmp(mb) {
                    Ordering::Greater => {
                        out.push((ma.clone(), ca.clone()));
                        i += 1;
                    }
                    Ordering::Less => {
                        out.push((mb.clone(), cb.clone()));
                        j += 1;
                    }
                    Ordering::Equal => {
                        let c = ca + cb;
                        if !c.is_zero() {
                            out.push((ma.clone(), c));
                        }
                        i += 1;
                        j += 1;
                    }
                },
                (Some((m, c)), None) => {
                    out.push((m.clone(), c.clone()));
                    i += 1;
                }
                (None, Some((m, c))) => {
                    out.push((m.clone(), c.clone()));
                    j += 1;
                }
                (None, None) => break,
            }
        }
        Poly { terms: out }
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if other.terms.len() == 1 {
            return self.mul_term(&other.terms[0].0, &other.terms[0].1);
        }
        if self.terms.len() == 1 {
            return other.mul_term(&self.terms[0].0, &self.terms[0].1);
        }
        let mut map: BTreeMap<Vec<(Var, u32)>, Q> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.mul(mb);
                let e = map.entry(m.0).or_insert_with(Q::zero);
                *e += ca * cb;
            }
        }
        let mut terms: Vec<(Mono, Q)> = map
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, c)| (Mono(m), c))
            .collect();
        terms.sort_by(|a, b| b.0.lex_cmp(&a.0));
        Poly { terms }
    }

    pub fn mul_term(&self, m: &Mono, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(ma, ca)| (ma.mul(m), ca * c))
                .collect(),
        }
    }

    pub fn scale(&self, c: &Q) -> Poly {
        self.mul_term(&Mono::one(), c)
    }

    pub fn pow(&self, mut k: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Exact division; `None` when the division does not come out even.
    pub fn div_exact(&self, div: &Poly) -> Option<Poly> {
        if div.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if div.is_one() {
            return Some(self.clone());
        }
        if let Some(c) = div.as_constant() {
            return Some(self.scale(&(Q::one() / c)));
        }
        let (lm, lc) = div.leading().unwrap();
        let mut rem = self.clone();
        let mut quo: Vec<(Mono, Q)> = Vec::new();
        while !rem.is_zero() {
            let (rm, rc) = rem.leading().unwrap();
            let m = rm.div(lm)?;
            let c = rc / lc;
            quo.push((m.clone(), c.clone()));
            rem = rem.sub(&div.mul_term(&m, &c));
        }
        Some(Poly::from_terms(quo))
    }

    /// All variables appearing, ascending.
    pub fn vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = Vec::new();
        for (m, _) in &self.terms {
            for &(v, _) in &m.0 {
                if let Err(pos) = vs.binary_search(&v) {
                    vs.insert(pos, v);
                }
            }
        }
        vs
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.iter().map(|(m, _)| m.exp(v)).max().unwrap_or(0)
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.terms.iter().any(|(m, _)| m.exp(v) > 0)
    }

    /// Coefficients of `v^k` for k = 0..=deg, each free of `v`.
    pub fn coeffs_in(&self, v: Var) -> Vec<Poly> {
        let d = self.degree_in(v) as usize;
        let mut out = vec![Poly::zero(); d + 1];
        for (m, c) in &self.terms {
            let k = m.exp(v) as usize;
            out[k] = out[k].add(&Poly {
                terms: vec![(m.without(v), c.clone())],
            });
        }
        out
    }

    /// Plain partial derivative treating every variable (radicals included)
    /// as independent. Chain rule for radicals lives in `Rat::partial`.
    pub fn partial_plain(&self, v: Var) -> Poly {
        let mut terms = Vec::new();
        for (m, c) in &self.terms {
            let e = m.exp(v);
            if e == 0 {
                continue;
            }
            let mut m2: Vec<(Var, u32)> = Vec::with_capacity(m.0.len());
            for &(w, k) in &m.0 {
                if w == v {
                    if k > 1 {
                        m2.push((w, k - 1));
                    }
                } else {
                    m2.push((w, k));
                }
            }
            terms.push((Mono(m2), c * Q::from_integer(Z::from(e))));
        }
        Poly::from_terms(terms)
    }

    /// Rational content (gcd of coefficients with the sign of the leading one).
    pub fn content(&self) -> Q {
        if self.is_zero() {
            return Q::zero();
        }
        let mut num = Z::zero();
        let mut den = Z::one();
        for (_, c) in &self.terms {
            num = num_integer::gcd(num, c.numer().clone());
            den = num_integer::lcm(den, c.denom().clone());
        }
        let mut c = Q::new(num, den);
        if self.terms[0].1.is_negative() {
            c = -c;
        }
        c
    }

    /// Divide out the rational content; `(content, primitive)`.
    pub fn primitive(&self) -> (Q, Poly) {
        if self.is_zero() {
            return (Q::zero(), Poly::zero());
        }
        let c = self.content();
        let inv = Q::one() / c.clone();
        (c, self.scale(&inv))
    }

    /// Exact n-th root if one exists.
    pub fn nth_root(&self, n: u32) -> Option<Poly> {
        if n == 0 {
            return None;
        }
        if n == 1 {
            return Some(self.clone());
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        let (lm, lc) = self.leading().unwrap();
        if lm.0.iter().any(|(_, e)| e % n != 0) {
            return None;
        }
        let rl = crate::q::rat_nth_root(lc, n)?;
        let mut root = Poly {
            terms: vec![(
                Mono(lm.0.iter().map(|&(v, e)| (v, e / n)).collect()),
                rl,
            )],
        };
        let max_steps = self.terms.len() * n as usize + 8;
        for _ in 0..max_steps {
            let rem = self.sub(&root.pow(n));
            if rem.is_zero() {
                return Some(root);
            }
            // next term of the root, by lex order
            let (rm, rc) = rem.leading().unwrap();
            let (qm, qc) = root.leading().unwrap();
            let dm = rm.div(&qm.pow(n - 1))?;
            let dc = rc / (qc.pow((n - 1) as i32).clone() * Q::from_integer(Z::from(n)));
            if dc.is_zero() {
                return None;
            }
            root = root.add(&Poly {
                terms: vec![(dm, dc)],
            });
        }
        let rem = self.sub(&root.pow(n));
        if rem.is_zero() {
            Some(root)
        } else {
            None
        }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let ac = if neg { -c.clone() } else { c.clone() };
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let show_coeff = !ac.is_one() || m.is_one();
            if show_coeff {
                write!(f, "{ac}")?;
                if !m.is_one() {
                    write!(f, "*")?;
                }
            }
            let mut first = true;
            for &(v, e) in &m.0 {
                if !first {
                    write!(f, "*")?;
                }
                first = false;
                write!(f, "v{}", v.0)?;
                if e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::q::qi;

    fn v(i: u32) -> Var {
        Var(i)
    }

    #[test]
    fn mul_and_div_roundtrip() {
        let a = Poly::var(v(1)).add(&Poly::one()); // v1 + 1
        let b = Poly::var(v(2)).sub(&Poly::constant(qi(3))); // v2 - 3
        let p = a.mul(&b);
        assert_eq!(p.div_exact(&a).unwrap(), b);
        assert_eq!(p.div_exact(&b).unwrap(), a);
        assert!(p.add(&Poly::one()).div_exact(&a).is_none());
    }

    #[test]
    fn nth_root_exact() {
        let a = Poly::var(v(1)).add(&Poly::var(v(2)).scale(&qi(2))); // v1 + 2 v2
        let sq = a.mul(&a);
        assert_eq!(sq.nth_root(2).unwrap(), a);
        let cube = a.mul(&a).mul(&a);
        assert_eq!(cube.nth_root(3).unwrap(), a);
        assert!(sq.add(&Poly::one()).nth_root(2).is_none());
    }
}
