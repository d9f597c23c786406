//! Modular multivariate gcd (Brown's dense evaluation/interpolation over
//! Z_p with CRT lifting), verified by exact trial division. This is the
//! workhorse; the subresultant PRS in `gcd.rs` remains as a fallback.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::expr::ctx::Var;
use crate::expr::poly::{Mono, Poly};
use crate::q::Z;

/// 31-bit primes so products fit in u64.
const PRIMES: [u64; 12] = [
    2147483647, 2147483629, 2147483587, 2147483579, 2147483563, 2147483549,
    2147483543, 2147483497, 2147483489, 2147483477, 2147483423, 2147483399,
];

#[derive(Clone, Debug, PartialEq)]
struct ZpPoly {
    terms: Vec<(Mono, u64)>, // descending lex, nonzero coeffs
}

fn addm(a: u64, b: u64, p: u64) -> u64 {
    let s = a + b;
    if s >= p {
        s - p
    } else {
        s
    }
}

fn subm(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + p - b
    }
}

fn mulm(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powm(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mulm(r, a, p);
        }
        a = mulm(a, a, p);
        e >>= 1;
    }
    r
}

fn invm(a: u64, p: u64) -> u64 {
    powm(a, p - 2, p)
}

impl ZpPoly {
    fn zero() -> Self {
        ZpPoly { terms: Vec::new() }
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn from_poly(p: &Poly, modp: u64) -> Option<ZpPoly> {
        // p must have integer coefficients
        let mut terms = Vec::with_capacity(p.terms.len());
        for (m, c) in &p.terms {
            if !c.denom().is_one() {
                return None;
            }
            let r = c.numer().mod_floor_u64(modp);
            if r != 0 {
                terms.push((m.clone(), r));
            }
        }
        Some(ZpPoly { terms })
    }

    fn degree_in(&self, v: Var) -> u32 {
        self.terms.iter().map(|(m, _)| m.exp(v)).max().unwrap_or(0)
    }

    fn vars(&self) -> Vec<Var> {
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

    fn normalize(mut terms: Vec<(Mono, u64)>) -> ZpPoly {
        terms.retain(|(_, c)| *c != 0);
        terms.sort_by(|a, b| b.0.lex_cmp(&a.0));
        // merge equal monomials (inputs here never have duplicates)
        ZpPoly { terms }
    }

    fn scale(&self, c: u64, p: u64) -> ZpPoly {
        if c == 0 {
            return ZpPoly::zero();
        }
        ZpPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, a)| (m.clone(), mulm(*a, c, p)))
                .collect(),
        }
    }

    fn add(&self, other: &ZpPoly, p: u64) -> ZpPoly {
        let mut map: std::collections::BTreeMap<Vec<(Var, u32)>, u64> =
            std::collections::BTreeMap::new();
        for (m, c) in self.terms.iter().chain(other.terms.iter()) {
            let e = map.entry(m.0.clone()).or_insert(0);
            *e = addm(*e, *c, p);
        }
        ZpPoly::normalize(
            map.into_iter()
                .map(|(m, c)| (Mono(m), c))
                .collect(),
        )
    }

    fn mul(&self, other: &ZpPoly, p: u64) -> ZpPoly {
        let mut map: std::collections::BTreeMap<Vec<(Var, u32)>, u64> =
            std::collections::BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.mul(mb);
                let e = map.entry(m.0).or_insert(0);
                *e = addm(*e, mulm(*ca, *cb, p), p);
            }
        }
        ZpPoly::normalize(map.into_iter().map(|(m, c)| (Mono(m), c)).collect())
    }

    /// Substitute `v = t`.
    fn eval_var(&self, v: Var, t: u64, p: u64) -> ZpPoly {
        let mut map: std::collections::BTreeMap<Vec<(Var, u32)>, u64> =
            std::collections::BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.exp(v);
            let c2 = if e == 0 {
                *c
            } else {
                mulm(*c, powm(t, e as u64, p), p)
            };
            if c2 == 0 {
                continue;
            }
            let key = m.without(v).0;
            let slot = map.entry(key).or_insert(0);
            *slot = addm(*slot, c2, p);
        }
        ZpPoly::normalize(map.into_iter().map(|(m, c)| (Mono(m), c)).collect())
    }

    /// Coefficients in `v`, each free of `v`.
    fn coeffs_in(&self, v: Var) -> Vec<ZpPoly> {
        let d = self.degree_in(v) as usize;
        let mut out = vec![ZpPoly::zero(); d + 1];
        for (m, c) in &self.terms {
            let k = m.exp(v) as usize;
            out[k].terms.push((m.without(v), *c));
        }
        for o in out.iter_mut() {
            o.terms.sort_by(|a, b| b.0.lex_cmp(&a.0));
        }
        out
    }

    fn mul_var_pow(&self, v: Var, e: u32) -> ZpPoly {
        if e == 0 {
            return self.clone();
        }
        let vm = Mono(vec![(v, e)]);
        ZpPoly {
            terms: self.terms.iter().map(|(m, c)| (m.mul(&vm), *c)).collect(),
        }
    }
}

trait ModFloor {
    fn mod_floor_u64(&self, p: u64) -> u64;
}

impl ModFloor for BigInt {
    fn mod_floor_u64(&self, p: u64) -> u64 {
        let m = self % BigInt::from(p);
        let m = if m.is_negative() { m + BigInt::from(p) } else { m };
        m.to_u64().unwrap()
    }
}

/// Univariate gcd in Z_p, monic.
fn univar_gcd(mut a: Vec<u64>, mut b: Vec<u64>, p: u64) -> Vec<u64> {
    let trim = |v: &mut Vec<u64>| {
        while v.last() == Some(&0) {
            v.pop();
        }
    };
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        // a mod b
        let lb = invm(*b.last().unwrap(), p);
        while a.len() >= b.len() && !a.is_empty() {
            let c = mulm(*a.last().unwrap(), lb, p);
            let shift = a.len() - b.len();
            for (i, bc) in b.iter().enumerate() {
                let t = mulm(c, *bc, p);
                a[i + shift] = subm(a[i + shift], t, p);
            }
            trim(&mut a);
        }
        std::mem::swap(&mut a, &mut b);
        trim(&mut b);
    }
    if let Some(&l) = a.last() {
        let li = invm(l, p);
        for c in a.iter_mut() {
            *c = mulm(*c, li, p);
        }
    }
    a
}

/// Exact division in Z_p[vars]; None if not exact.
fn div_exact_zp(a: &ZpPoly, b: &ZpPoly, p: u64) -> Option<ZpPoly> {
    if b.is_zero() {
        return None;
    }
    if a.is_zero() {
        return Some(ZpPoly::zero());
    }
    let (lm, lc) = (&b.terms[0].0, b.terms[0].1);
    let lci = invm(lc, p);
    let mut rem = a.clone();
    let mut quo: Vec<(Mono, u64)> = Vec::new();
    let mut guard = a.terms.len() * (b.terms.len() + 2) + 64;
    while !rem.is_zero() {
        if guard == 0 {
            return None;
        }
        guard -= 1;
        let (rm, rc) = (&rem.terms[0].0, rem.terms[0].1);
        let m = rm.div(lm)?;
        let c = mulm(rc, lci, p);
        quo.push((m.clone(), c));
        let sub = ZpPoly {
            terms: vec![(m, c)],
        }
        .mul(b, p);
        rem = rem.add(&sub.scale(p - 1, p), p);
    }
    Some(ZpPoly::normalize(quo))
}

/// Brown's gcd in Z_p[vars]: strip contents with respect to a main
/// variable, then interpolate the lc-scaled gcd from univariate images at
/// full evaluation points.
fn gcd_zp(f: &ZpPoly, g: &ZpPoly, p: u64, depth: usize) -> Option<ZpPoly> {
    if depth > 64 {
        return None;
    }
    if f.is_zero() {
        return Some(g.clone());
    }
    if g.is_zero() {
        return Some(f.clone());
    }
    let mut vars = f.vars();
    for v in g.vars() {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    vars.sort();
    let common: Vec<Var> = vars
        .iter()
        .copied()
        .filter(|v| f.degree_in(*v) > 0 && g.degree_in(*v) > 0)
        .collect();
    if common.is_empty() {
        return Some(ZpPoly {
            terms: vec![(Mono::one(), 1)],
        });
    }
    let x = *common
        .iter()
        .min_by_key(|v| f.degree_in(**v).min(g.degree_in(**v)))
        .unwrap();

    // contents with respect to x
    let fc = f.coeffs_in(x);
    let gc = g.coeffs_in(x);
    let cont = |cs: &[ZpPoly]| -> Option<ZpPoly> {
        let mut acc = ZpPoly::zero();
        for c in cs {
            if !c.is_zero() {
                acc = gcd_zp(&acc, c, p, depth + 1)?;
            }
        }
        Some(acc)
    };
    let cont_f = cont(&fc)?;
    let cont_g = cont(&gc)?;
    let cont_gcd = gcd_zp(&cont_f, &cont_g, p, depth + 1)?;
    let strip = |cs: &[ZpPoly], c: &ZpPoly| -> Option<Vec<ZpPoly>> {
        cs.iter()
            .map(|ci| {
                if ci.is_zero() {
                    Some(ZpPoly::zero())
                } else {
                    div_exact_zp(ci, c, p)
                }
            })
            .collect()
    };
    let fpp = strip(&fc, &cont_f)?;
    let gpp = strip(&gc, &cont_g)?;

    let assemble = |cs: &[ZpPoly]| -> ZpPoly {
        let mut acc = ZpPoly::zero();
        for (k, c) in cs.iter().enumerate() {
            acc = acc.add(&c.mul_var_pow(x, k as u32), p);
        }
        acc
    };
    let fp = assemble(&fpp);
    let gp = assemble(&gpp);
    let lc_f = fpp.last().unwrap().clone();
    let lc_g = gpp.last().unwrap().clone();

    let mut others: Vec<Var> = Vec::new();
    for c in fpp.iter().chain(gpp.iter()) {
        for v in c.vars() {
            if !others.contains(&v) {
                others.push(v);
            }
        }
    }
    others.sort();

    let pp = if others.is_empty() {
        let fu: Vec<u64> = fpp
            .iter()
            .map(|c| c.terms.first().map(|(_, a)| *a).unwrap_or(0))
            .collect();
        let gu: Vec<u64> = gpp
            .iter()
            .map(|c| c.terms.first().map(|(_, a)| *a).unwrap_or(0))
            .collect();
        univar_to_poly(&univar_gcd(fu, gu, p), x)
    } else {
        // lc-scaled target: G_scaled = gamma * monic_x(G), interpolated over
        // the non-main variables from univariate leaves
        let gamma = gcd_zp(&lc_f, &lc_g, p, depth + 1)?;
        // per-variable degree bounds for G_scaled
        let bounds: Vec<(Var, u32)> = others
            .iter()
            .map(|v| {
                (
                    *v,
                    fp.degree_in(*v).min(gp.degree_in(*v)) + gamma.degree_in(*v),
                )
            })
            .collect();
        let mut expected_degx: Option<u32> = None;
        let mut seed: u64 = 1;
        'retry: loop {
            let mut ctx = InterpCtx {
                p,
                x,
                fp: &fp,
                gp: &gp,
                lc_f: &lc_f,
                lc_g: &lc_g,
                gamma: &gamma,
                expected_degx,
                seed: &mut seed,
                budget: 4_000_000u64,
            };
            match interp_vars(&bounds, &BTreeMapPoint::new(), &mut ctx) {
                InterpResult::Ok(h) => {
                    if h.is_zero() {
                        return None;
                    }
                    // strip the x-content introduced by the gamma scaling
                    let hc = h.coeffs_in(x);
                    let c = cont(&hc)?;
                    let stripped = strip(&hc, &c)?;
                    break 'retry assemble(&stripped);
                }
                InterpResult::DegreeDrop(d) => {
                    expected_degx = Some(d);
                    continue 'retry;
                }
                InterpResult::Fail => return None,
            }
        }
    };

    if pp.is_zero() {
        return Some(cont_gcd);
    }
    Some(pp.mul(&cont_gcd, p))
}

fn univar_to_poly(h: &[u64], x: Var) -> ZpPoly {
    let mut terms = Vec::new();
    for (k, &c) in h.iter().enumerate() {
        if c != 0 {
            let m = if k == 0 {
                Mono::one()
            } else {
                Mono(vec![(x, k as u32)])
            };
            terms.push((m, c));
        }
    }
    ZpPoly::normalize(terms)
}

type BTreeMapPoint = std::collections::BTreeMap<Var, u64>;

struct InterpCtx<'a> {
    p: u64,
    x: Var,
    fp: &'a ZpPoly,
    gp: &'a ZpPoly,
    lc_f: &'a ZpPoly,
    lc_g: &'a ZpPoly,
    gamma: &'a ZpPoly,
    expected_degx: Option<u32>,
    seed: &'a mut u64,
    budget: u64,
}

enum InterpResult {
    Ok(ZpPoly),
    DegreeDrop(u32),
    Fail,
}

fn next_t(ctx: &mut InterpCtx) -> u64 {
    // simple LCG over Z_p \ {0}
    *ctx.seed = (ctx.seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407))
        % (ctx.p - 1);
    *ctx.seed + 1
}

fn eval_full(e: &ZpPoly, point: &BTreeMapPoint, p: u64) -> ZpPoly {
    let mut cur = e.clone();
    for (&v, &t) in point {
        cur = cur.eval_var(v, t, p);
    }
    cur
}

/// Interpolate over the listed variables; the empty list is the univariate
/// leaf.
fn interp_vars(
    bounds: &[(Var, u32)],
    point: &BTreeMapPoint,
    ctx: &mut InterpCtx,
) -> InterpResult {
    let p = ctx.p;
    if bounds.is_empty() {
        // leaf: check lc nonvanishing, univariate gcd, gamma scaling
        let lf = eval_full(ctx.lc_f, point, p);
        let lg = eval_full(ctx.lc_g, point, p);
        let (Some((_, lfc)), Some((_, lgc))) = (lf.terms.first(), lg.terms.first()) else {
            return InterpResult::Fail; // vanishing lc: caller resamples
        };
        if *lfc == 0 || *lgc == 0 {
            return InterpResult::Fail;
        }
        let ft = eval_full(ctx.fp, point, p);
        let gt = eval_full(ctx.gp, point, p);
        let fu: Vec<u64> = ft
            .coeffs_in(ctx.x)
            .iter()
            .map(|c| c.terms.first().map(|(_, a)| *a).unwrap_or(0))
            .collect();
        let gu: Vec<u64> = gt
            .coeffs_in(ctx.x)
            .iter()
            .map(|c| c.terms.first().map(|(_, a)| *a).unwrap_or(0))
            .collect();
        let h = univar_gcd(fu, gu, p);
        let d = h.len().saturating_sub(1) as u32;
        match ctx.expected_degx {
            Some(e) if d > e => return InterpResult::Fail, // unlucky point
            Some(e) if d < e => return InterpResult::DegreeDrop(d),
            None => {}
            _ => {}
        }
        if ctx.expected_degx.is_none() {
            ctx.expected_degx = Some(d);
        }
        if d == 0 {
            return InterpResult::Ok(ZpPoly {
                terms: vec![(Mono::one(), 1)],
            });
        }
        let gam = eval_full(ctx.gamma, point, p);
        let gs = gam.terms.first().map(|(_, c)| *c).unwrap_or(0);
        if gs == 0 {
            return InterpResult::Fail;
        }
        let scaled: Vec<u64> = h.iter().map(|c| mulm(*c, gs, p)).collect();
        return InterpResult::Ok(univar_to_poly(&scaled, ctx.x));
    }
    // interpolate over bounds[0]
    let (v, bound) = bounds[0];
    let rest = &bounds[1..];
    let npoints = bound as usize + 1;
    let mut acc = ZpPoly::zero();
    let mut pts: Vec<u64> = Vec::with_capacity(npoints);
    let mut misses = 0u32;
    while pts.len() < npoints {
        if ctx.budget == 0 {
            return InterpResult::Fail;
        }
        ctx.budget -= 1;
        let t = next_t(ctx);
        if pts.contains(&t) {
            continue;
        }
        let mut sub_point = point.clone();
        sub_point.insert(v, t);
        match interp_vars(rest, &sub_point, ctx) {
            InterpResult::Ok(h) => {
                // Newton step
                let acc_t = acc.eval_var(v, t, p);
                let diff = h.add(&acc_t.scale(p - 1, p), p);
                if !diff.is_zero() {
                    let mut basis = ZpPoly {
                        terms: vec![(Mono::one(), 1)],
                    };
                    let mut denom = 1u64;
                    for &pt in &pts {
                        let lin = ZpPoly::normalize(vec![
                            (Mono(vec![(v, 1)]), 1),
                            (Mono::one(), p - (pt % p)),
                        ]);
                        basis = basis.mul(&lin, p);
                        denom = mulm(denom, subm(t, pt, p), p);
                    }
                    let corr = diff.mul(&basis.scale(invm(denom, p), p), p);
                    acc = acc.add(&corr, p);
                }
                pts.push(t);
                // early exit: the degree-0 gcd shortcut
                if acc.terms.len() == 1
                    && acc.terms[0].0.is_one()
                    && ctx.expected_degx == Some(0)
                {
                    return InterpResult::Ok(acc);
                }
            }
            InterpResult::DegreeDrop(d) => return InterpResult::DegreeDrop(d),
            InterpResult::Fail => {
                misses += 1;
                if misses > 40 + 4 * bound {
                    return InterpResult::Fail;
                }
            }
        }
    }
    InterpResult::Ok(acc)
}

/// Integer-primitive gcd candidate by single-prime images with CRT lifting,
/// verified by exact division over Q. Inputs must be integer-primitive.
pub fn gcd_modular(a: &Poly, b: &Poly) -> Option<Poly> {
    let mut crt: Option<(Vec<(Mono, Z)>, Z)> = None; // symmetric residues, modulus
    for (tries, &p) in PRIMES.iter().enumerate() {
        let fa = ZpPoly::from_poly(a, p)?;
        let fb = ZpPoly::from_poly(b, p)?;
        if fa.is_zero() || fb.is_zero() {
            continue;
        }
        let g = gcd_zp(&fa, &fb, p, 0)?;
        if g.terms.len() == 1 && g.terms[0].0.is_one() {
            return Some(Poly::one());
        }
        // make monic-normalised image to align across primes
        let lc = g.terms[0].1;
        let g = g.scale(invm(lc, p), p);
        let lifted: Vec<(Mono, Z)> = g
            .terms
            .iter()
            .map(|(m, c)| (m.clone(), Z::from(*c)))
            .collect();
        crt = match crt {
            None => Some((lifted, Z::from(p))),
            Some((prev, modulus)) => {
                // monomial support must agree; otherwise restart with this prime
                if prev.len() != lifted.len()
                    || prev.iter().zip(&lifted).any(|((m1, _), (m2, _))| m1 != m2)
                {
                    Some((lifted, Z::from(p)))
                } else {
                    let pz = Z::from(p);
                    let newmod = &modulus * &pz;
                    let minv = mod_inverse(&modulus, &pz)?;
                    let combined: Vec<(Mono, Z)> = prev
                        .into_iter()
                        .zip(&lifted)
                        .map(|((m, r1), (_, r2))| {
                            // x = r1 + modulus * ((r2 - r1) * minv mod p)
                            let diff = (r2 - &r1) % &pz;
                            let diff = if diff.is_negative() { diff + &pz } else { diff };
                            let k = (&diff * &minv) % &pz;
                            (m, r1 + &modulus * k)
                        })
                        .collect();
                    Some((combined, newmod))
                }
            }
        };
        // attempt reconstruction with rational coefficients (monic image):
        if let Some((res, modulus)) = &crt {
            if let Some(cand) = reconstruct(res, modulus) {
                if !cand.is_zero()
                    && a.div_exact(&cand).is_some()
                    && b.div_exact(&cand).is_some()
                {
                    return Some(cand.primitive().1);
                }
            }
        }
        if tries > 8 {
            if std::env::var("INVAREL_GCD_TRACE").is_ok() {
                eprintln!("gcd_modular: exhausted primes");
            }
            return None;
        }
    }
    None
}

fn mod_inverse(a: &Z, p: &Z) -> Option<Z> {
    // extended euclid
    let (mut r0, mut r1) = (p.clone(), a % p);
    if r1.is_negative() {
        r1 += p;
    }
    let (mut s0, mut s1) = (Z::zero(), Z::from(1));
    while !r1.is_zero() {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let s2 = &s0 - &q * &s1;
        r0 = r1;
        r1 = r2;
        s0 = s1;
        s1 = s2;
    }
    if r0 != Z::from(1) {
        return None;
    }
    let mut s = s0 % p;
    if s.is_negative() {
        s += p;
    }
    Some(s)
}

/// Rational reconstruction of each monic-image coefficient, then clearing
/// denominators into a primitive integer polynomial.
fn reconstruct(res: &[(Mono, Z)], modulus: &Z) -> Option<Poly> {
    let mut terms = Vec::with_capacity(res.len());
    for (m, r) in res {
        let q = rational_reconstruct(r, modulus)?;
        terms.push((m.clone(), q));
    }
    let p = Poly::from_terms(
        terms
            .into_iter()
            .map(|(m, q)| (m, q))
            .collect(),
    );
    if p.is_zero() {
        return None;
    }
    Some(p.primitive().1)
}

/// Wang's rational reconstruction: find n/d = r mod m with |n|, d <= sqrt(m/2).
fn rational_reconstruct(r: &Z, m: &Z) -> Option<crate::q::Q> {
    let mut r0 = m.clone();
    let mut r1 = r % m;
    if r1.is_negative() {
        r1 += m;
    }
    let mut t0 = Z::zero();
    let mut t1 = Z::from(1);
    let bound = crate::q::int_floor_sqrt(&(m / Z::from(2)));
    while r1 >= bound {
        if r1.is_zero() {
            return None;
        }
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        r0 = r1;
        r1 = r2;
        t0 = t1;
        t1 = t2;
    }
    if t1.is_zero() || t1.abs() > bound {
        return None;
    }
    Some(crate::q::Q::new(r1, t1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::q::qi;

    fn v(i: u32) -> Var {
        Var(i)
    }

    #[test]
    fn modular_gcd_powers() {
        let w = Poly::var(v(1)).mul(&Poly::var(v(1))).add(&Poly::one()); // y^2+1
        let h = Poly::var(v(2)).add(&Poly::var(v(3)).scale(&qi(3))); // z + 3u
        let a = w.pow(5).mul(&h);
        let b = w.pow(6);
        let g = gcd_modular(&a, &b).unwrap();
        let expect = w.pow(5);
        assert!(g == expect || g == expect.neg(), "got {g}");
    }

    #[test]
    fn modular_gcd_coprime() {
        let a = Poly::var(v(1)).add(&Poly::one());
        let b = Poly::var(v(2)).add(&Poly::constant(qi(7)));
        let g = gcd_modular(&a, &b).unwrap();
        assert!(g.is_one(), "got {g}");
    }
}
