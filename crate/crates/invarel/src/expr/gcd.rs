//! Multivariate polynomial gcd over Q via monomial/content extraction and a
//! subresultant pseudo-remainder sequence in a chosen main variable.

use crate::expr::ctx::Var;
use crate::expr::poly::{Mono, Poly};

/// Primitive gcd (content 1 up to sign) of two polynomials, all variables
/// treated as independent.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.primitive().1;
    }
    if b.is_zero() {
        return a.primitive().1;
    }
    // common monomial factor
    let ma = a
        .terms
        .iter()
        .skip(1)
        .fold(a.terms[0].0.clone(), |acc, (m, _)| acc.gcd(m));
    let mb = b
        .terms
        .iter()
        .skip(1)
        .fold(b.terms[0].0.clone(), |acc, (m, _)| acc.gcd(m));
    let mg = ma.gcd(&mb);
    let a1 = strip_mono(a, &ma).primitive().1;
    let b1 = strip_mono(b, &mb).primitive().1;
    let mono_part = Poly {
        terms: vec![(mg, crate::q::qi(1))],
    };

    if a1.is_constant() || b1.is_constant() {
        return mono_part;
    }
    if a1 == b1 {
        return mono_part.mul(&a1);
    }
    if b1.div_exact(&a1).is_some() {
        return mono_part.mul(&a1);
    }
    if a1.div_exact(&b1).is_some() {
        return mono_part.mul(&b1);
    }

    // main variable: common var minimising the smaller degree
    let vars_a = a1.vars();
    let vars_b = b1.vars();
    let mut best: Option<(Var, u32)> = None;
    for v in &vars_a {
        if vars_b.contains(v) {
            let d = a1.degree_in(*v).min(b1.degree_in(*v));
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((*v, d));
            }
        }
    }
    let Some((x, _)) = best else {
        return mono_part;
    };

    // modular gcd first; subresultant PRS as the exact fallback
    if let Some(g) = crate::expr::zpgcd::gcd_modular(&a1, &b1) {
        return mono_part.mul(&g);
    }
    let g = gcd_in_var(&a1, &b1, x);
    mono_part.mul(&g)
}

fn strip_mono(p: &Poly, m: &Mono) -> Poly {
    Poly {
        terms: p
            .terms
            .iter()
            .map(|(mm, c)| (mm.div(m).expect("monomial content divides"), c.clone()))
            .collect(),
    }
}

fn to_univar(p: &Poly, x: Var) -> Vec<Poly> {
    p.coeffs_in(x)
}

fn from_univar(cs: &[Poly], x: Var) -> Poly {
    let mut out = Poly::zero();
    for (k, c) in cs.iter().enumerate() {
        if !c.is_zero() {
            out = out.add(&c.mul(&Poly::var(x).pow(k as u32)));
        }
    }
    out
}

fn deg(u: &[Poly]) -> Option<usize> {
    u.iter().rposition(|c| !c.is_zero())
}

fn content_in_var(u: &[Poly]) -> Poly {
    let mut c = Poly::zero();
    for coef in u {
        if !coef.is_zero() {
            c = gcd(&c, coef);
        }
    }
    c
}

/// Pseudo-remainder `lc(b)^(deg a - deg b + 1) * a mod b` in the univariate view.
fn prem(a: &[Poly], b: &[Poly]) -> Vec<Poly> {
    let da = deg(a).unwrap();
    let db = deg(b).unwrap();
    debug_assert!(da >= db && db >= 1);
    let lb = b[db].clone();
    let mut r: Vec<Poly> = a.to_vec();
    let mut e = (da - db + 1) as u32;
    loop {
        let dr = match deg(&r) {
            Some(d) => d,
            None => break,
        };
        if dr < db {
            break;
        }
        // r = lb * r - lead(r) * x^(dr-db) * b
        let lead = r[dr].clone();
        for c in r.iter_mut() {
            *c = c.mul(&lb);
        }
        for j in 0..=db {
            let t = lead.mul(&b[j]);
            r[j + dr - db] = r[j + dr - db].sub(&t);
        }
        e -= 1;
        debug_assert!(deg(&r).map_or(true, |d| d < dr));
    }
    if e > 0 {
        let scale = lb.pow(e);
        for c in r.iter_mut() {
            *c = c.mul(&scale);
        }
    }
    while r.last().map_or(false, |c| c.is_zero()) {
        r.pop();
    }
    r
}

fn gcd_in_var(a: &Poly, b: &Poly, x: Var) -> Poly {
    let ua = to_univar(a, x);
    let ub = to_univar(b, x);
    let cont_a = content_in_var(&ua);
    let cont_b = content_in_var(&ub);
    let cont_g = gcd(&cont_a, &cont_b);
    let pa: Vec<Poly> = ua
        .iter()
        .map(|c| c.div_exact(&cont_a).expect("content divides"))
        .collect();
    let pb: Vec<Poly> = ub
        .iter()
        .map(|c| c.div_exact(&cont_b).expect("content divides"))
        .collect();

    let (mut f, mut g) = if deg(&pa) >= deg(&pb) {
        (pa, pb)
    } else {
        (pb, pa)
    };

    // subresultant PRS
    let mut gg = Poly::one();
    let mut hh = Poly::one();
    let pp = loop {
        let df = deg(&f).unwrap();
        let dg = match deg(&g) {
            None => break from_univar(&f, x),
            Some(d) => d,
        };
        if dg == 0 {
            break Poly::one();
        }
        let delta = (df - dg) as u32;
        let r = prem(&f, &g);
        if r.is_empty() {
            break from_univar(&g, x);
        }
        let divisor = gg.mul(&hh.pow(delta));
        let rn: Vec<Poly> = r
            .iter()
            .map(|c| c.div_exact(&divisor).expect("subresultant division is exact"))
            .collect();
        f = g;
        g = rn;
        gg = f[deg(&f).unwrap()].clone();
        hh = if delta == 0 {
            hh
        } else {
            let num = gg.pow(delta);
            if delta == 1 {
                num
            } else {
                num.div_exact(&hh.pow(delta - 1))
                    .expect("subresultant h-update is exact")
            }
        };
    };

    if pp.is_constant() {
        return cont_g;
    }
    // primitive part with respect to x, then overall primitive
    let u = to_univar(&pp, x);
    let c = content_in_var(&u);
    let prim: Vec<Poly> = u
        .iter()
        .map(|t| t.div_exact(&c).expect("content divides"))
        .collect();
    let mut g0 = from_univar(&prim, x).primitive().1;

    // the PRS result should divide both inputs
    debug_assert!(a.div_exact(&g0).is_some() && b.div_exact(&g0).is_some(), "gcd must divide");
    g0 = g0.mul(&cont_g);
    g0.primitive().1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::q::qi;

    fn v(i: u32) -> Var {
        Var(i)
    }

    #[test]
    fn multivariate_gcd() {
        let x = Poly::var(v(0));
        let y = Poly::var(v(1));
        let a = x.add(&y); // x + y
        let b = x.sub(&y); // x - y
        let p = a.mul(&a).mul(&b); // (x+y)^2 (x-y)
        let q = a.mul(&b).mul(&b).mul(&y); // (x+y)(x-y)^2 y
        let g = gcd(&p, &q);
        let expect = a.mul(&b);
        assert!(
            g == expect || g == expect.neg(),
            "got {g}, expected +-{expect}"
        );
    }

    #[test]
    fn coprime_gcd_is_constant() {
        let x = Poly::var(v(0));
        let y = Poly::var(v(1));
        let a = x.add(&Poly::one());
        let b = y.add(&Poly::constant(qi(2)));
        assert!(gcd(&a, &b).is_constant());
    }
}
