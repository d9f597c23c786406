//! Differential forms on jet space over the coordinate coframe
//! `{dx, theta^i_j}` (with `du^i_j` accepted as input and rewritten).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::ctx::{Ctx, VarKind};
use crate::expr::rat::Rat;
use crate::jet::vf::VectorField;
use crate::jet::{jet_support, total_derivative};

/// Basis 1-forms. The `Ord` instance fixes the wedge normal form.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum CoBasis {
    Dx,
    Theta { dep: usize, ord: u32 },
    Du { dep: usize, ord: u32 },
}

/// A differential form: map from strictly increasing wedge words to
/// coefficients. The zero form of any degree has no terms.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Form {
    pub degree: usize,
    pub terms: BTreeMap<Vec<CoBasis>, Rat>,
}

impl Form {
    pub fn zero(degree: usize) -> Self {
        Form {
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn function(c: Rat) -> Self {
        let mut f = Form::zero(0);
        if !c.is_zero() {
            f.terms.insert(Vec::new(), c);
        }
        f
    }

    pub fn one_form(b: CoBasis, c: Rat) -> Self {
        let mut f = Form::zero(1);
        if !c.is_zero() {
            f.terms.insert(vec![b], c);
        }
        f
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_order(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|w| w.iter())
            .filter_map(|b| match b {
                CoBasis::Theta { ord, .. } | CoBasis::Du { ord, .. } => Some(*ord),
                CoBasis::Dx => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &Form, ctx: &Ctx) -> Result<Form> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.degree != other.degree {
            return Err(Error::ShapeMismatch(format!(
                "adding forms of degree {} and {}",
                self.degree, other.degree
            )));
        }
        let mut out = self.clone();
        for (w, c) in &other.terms {
            let cur = out.terms.remove(w);
            let sum = match cur {
                Some(prev) => prev.add(c, ctx)?,
                None => c.clone(),
            };
            if !sum.is_zero() {
                out.terms.insert(w.clone(), sum);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rat, ctx: &Ctx) -> Result<Form> {
        let mut out = Form::zero(self.degree);
        if c.is_zero() {
            return Ok(out);
        }
        for (w, k) in &self.terms {
            let s = k.mul(c, ctx)?;
            if !s.is_zero() {
                out.terms.insert(w.clone(), s);
            }
        }
        Ok(out)
    }

    pub fn neg(&self) -> Form {
        Form {
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|(w, c)| (w.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Form, ctx: &Ctx) -> Result<Form> {
        self.add(&other.neg(), ctx)
    }

    pub fn wedge(&self, other: &Form, ctx: &Ctx) -> Result<Form> {
        let mut out = Form::zero(self.degree + other.degree);
        for (wa, ca) in &self.terms {
            for (wb, cb) in &other.terms {
                if let Some((w, sign)) = merge_wedge(wa, wb) {
                    let mut c = ca.mul(cb, ctx)?;
                    if sign < 0 {
                        c = c.neg();
                    }
                    let cur = out.terms.remove(&w);
                    let sum = match cur {
                        Some(prev) => prev.add(&c, ctx)?,
                        None => c,
                    };
                    if !sum.is_zero() {
                        out.terms.insert(w, sum);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Rewrite any `du^i_j` into `theta^i_j + u^i_{j+1} dx`.
    pub fn to_contact_basis(&self, ctx: &Ctx, max_ord: u32) -> Result<Form> {
        let mut out = Form::zero(self.degree);
        for (w, c) in &self.terms {
            let mut parts: Vec<Form> = Vec::new();
            for b in w {
                let f = match *b {
                    CoBasis::Du { dep, ord } => {
                        if ord + 1 > max_ord {
                            return Err(Error::JetOrderExceeded(ord + 1, max_ord));
                        }
                        let mut f =
                            Form::one_form(CoBasis::Theta { dep, ord }, Rat::one());
                        f = f.add(
                            &Form::one_form(CoBasis::Dx, Rat::var(ctx.dep(dep, ord + 1))),
                            ctx,
                        )?;
                        f
                    }
                    other => Form::one_form(other, Rat::one()),
                };
                parts.push(f);
            }
            let mut acc = Form::function(c.clone());
            for p in parts {
                acc = acc.wedge(&p, ctx)?;
            }
            out = out.add(&acc, ctx)?;
        }
        Ok(out)
    }

    /// Exterior derivative, staying in the contact basis. Input must be in
    /// the contact basis already.
    pub fn d(&self, ctx: &Ctx, max_ord: u32) -> Result<Form> {
        let mut out = Form::zero(self.degree + 1);
        for (w, c) in &self.terms {
            // dc ^ w
            let dc = d_function(c, ctx, max_ord)?;
            let mut base = Form::zero(self.degree);
            base.terms.insert(w.clone(), Rat::one());
            out = out.add(&dc.wedge(&base, ctx)?, ctx)?;
            // c * sum (-1)^(i-1) b1 ^ .. ^ d b_i ^ .. ^ bk
            for (i, b) in w.iter().enumerate() {
                if let CoBasis::Theta { dep, ord } = *b {
                    if ord + 1 > max_ord {
                        return Err(Error::JetOrderExceeded(ord + 1, max_ord));
                    }
                    // d theta^i_j = dx ^ theta^i_{j+1}
                    let mut db = Form::zero(2);
                    db.terms.insert(
                        vec![CoBasis::Dx, CoBasis::Theta { dep, ord: ord + 1 }],
                        Rat::one(),
                    );
                    let mut left = Form::zero(i);
                    left.terms.insert(w[..i].to_vec(), Rat::one());
                    let mut right = Form::zero(w.len() - i - 1);
                    right.terms.insert(w[i + 1..].to_vec(), Rat::one());
                    let sign = if i % 2 == 0 { 1 } else { -1 };
                    let mut piece = left.wedge(&db, ctx)?.wedge(&right, ctx)?;
                    piece = piece.scale(
                        &if sign > 0 {
                            c.clone()
                        } else {
                            c.neg()
                        },
                        ctx,
                    )?;
                    out = out.add(&piece, ctx)?;
                }
            }
        }
        Ok(out)
    }

    /// Interior product with a prolonged vector field.
    pub fn contract(&self, x: &VectorField, ctx: &Ctx) -> Result<Form> {
        if self.degree == 0 {
            return Err(Error::ShapeMismatch("contracting a 0-form".into()));
        }
        let needed = self.max_order();
        if x.order < needed.saturating_add(1) && !x.is_total_derivative {
            return Err(Error::ShapeMismatch(format!(
                "vector field prolonged to order {} but the form has order {}",
                x.order, needed
            )));
        }
        let mut out = Form::zero(self.degree - 1);
        for (w, c) in &self.terms {
            for (i, b) in w.iter().enumerate() {
                let pairing = x.pair_basis(*b, ctx)?;
                if pairing.is_zero() {
                    continue;
                }
                let sign = if i % 2 == 0 { 1 } else { -1 };
                let mut word = w.clone();
                word.remove(i);
                let mut coeff = c.mul(&pairing, ctx)?;
                if sign < 0 {
                    coeff = coeff.neg();
                }
                let mut piece = Form::zero(self.degree - 1);
                piece.terms.insert(word, coeff);
                out = out.add(&piece, ctx)?;
            }
        }
        Ok(out)
    }

    /// Cartan formula `L_X = i_X d + d i_X`.
    pub fn lie_derivative(&self, x: &VectorField, ctx: &Ctx, max_ord: u32) -> Result<Form> {
        if self.degree == 0 {
            let c = self.terms.get(&Vec::new()).cloned().unwrap_or_else(Rat::zero);
            return Ok(Form::function(x.apply(&c, ctx)?));
        }
        let a = self.d(ctx, max_ord)?.contract(x, ctx)?;
        let b = self.contract(x, ctx)?;
        if b.degree == 0 {
            let c = b.terms.get(&Vec::new()).cloned().unwrap_or_else(Rat::zero);
            // d of the function i_X omega
            let db = d_function(&c, ctx, max_ord)?;
            return a.add(&db, ctx);
        }
        a.add(&b.d(ctx, max_ord)?, ctx)
    }

    /// Purely-contact check: no term contains `dx`.
    pub fn is_contact(&self) -> bool {
        self.terms
            .keys()
            .all(|w| w.iter().all(|b| !matches!(b, CoBasis::Dx)))
    }

    /// Substitute into every coefficient.
    pub fn map_coeffs<F>(&self, mut f: F) -> Result<Form>
    where
        F: FnMut(&Rat) -> Result<Rat>,
    {
        let mut out = Form::zero(self.degree);
        for (w, c) in &self.terms {
            let c2 = f(c)?;
            if !c2.is_zero() {
                out.terms.insert(w.clone(), c2);
            }
        }
        Ok(out)
    }

    pub fn coeff(&self, w: &[CoBasis]) -> Rat {
        self.terms.get(w).cloned().unwrap_or_else(Rat::zero)
    }
}

/// `d f` for a function, directly in the contact basis:
/// `df = D_x(f) dx + sum (df/du^i_j) theta^i_j`.
pub fn d_function(f: &Rat, ctx: &Ctx, max_ord: u32) -> Result<Form> {
    let mut out = Form::one_form(CoBasis::Dx, total_derivative(f, ctx, max_ord)?);
    for v in jet_support(f, ctx) {
        if let VarKind::Dep { dep, ord } = ctx.kind(v) {
            let c = f.partial(v, ctx)?;
            if !c.is_zero() {
                out = out.add(
                    &Form::one_form(
                        CoBasis::Theta {
                            dep: dep as usize,
                            ord,
                        },
                        c,
                    ),
                    ctx,
                )?;
            }
        }
    }
    Ok(out)
}

/// Merge two ascending wedge words; `None` on a repeated basis element.
fn merge_wedge(a: &[CoBasis], b: &[CoBasis]) -> Option<(Vec<CoBasis>, i32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let mut sign = 1;
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => {
                if x == y {
                    return None;
                }
                if x < y {
                    out.push(*x);
                    i += 1;
                } else {
                    // moving y over the remaining elements of a
                    if (a.len() - i) % 2 == 1 {
                        sign = -sign;
                    }
                    out.push(*y);
                    j += 1;
                }
            }
            (Some(x), None) => {
                out.push(*x);
                i += 1;
            }
            (None, Some(y)) => {
                out.push(*y);
                j += 1;
            }
            (None, None) => break,
        }
    }
    Some((out, sign))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse::parse;
    use crate::jet::split_dh_dv;

    fn th(dep: usize, ord: u32) -> CoBasis {
        CoBasis::Theta { dep, ord }
    }

    #[test]
    fn du_to_contact_basis() {
        let ctx = Ctx::jet(&["y"]);
        let dy = Form::one_form(CoBasis::Du { dep: 0, ord: 0 }, Rat::one());
        let c = dy.to_contact_basis(&ctx, 12).unwrap();
        assert_eq!(c.coeff(&[th(0, 0)]), Rat::one());
        assert_eq!(c.coeff(&[CoBasis::Dx]), parse(&ctx, "y1").unwrap());
    }

    #[test]
    fn wedge_rewrites_to_theta_dx() {
        let ctx = Ctx::jet(&["y"]);
        // (dy - y1 dx) ^ (dx + y1 dy) = (1+y1^2) theta0 ^ dx
        let a = Form::one_form(CoBasis::Du { dep: 0, ord: 0 }, Rat::one())
            .add(
                &Form::one_form(CoBasis::Dx, parse(&ctx, "-y1").unwrap()),
                &ctx,
            )
            .unwrap()
            .to_contact_basis(&ctx, 12)
            .unwrap();
        let b = Form::one_form(CoBasis::Dx, Rat::one())
            .add(
                &Form::one_form(CoBasis::Du { dep: 0, ord: 0 }, parse(&ctx, "y1").unwrap()),
                &ctx,
            )
            .unwrap()
            .to_contact_basis(&ctx, 12)
            .unwrap();
        let w = a.wedge(&b, &ctx).unwrap();
        assert_eq!(w.terms.len(), 1);
        // Dx < Theta in the word order, so the stored word is dx ^ theta0
        assert_eq!(
            w.coeff(&[CoBasis::Dx, th(0, 0)]),
            parse(&ctx, "-(1+y1^2)").unwrap()
        );
    }

    #[test]
    fn lie_derivative_examples() {
        let ctx = Ctx::jet(&["y"]);
        let dx = Form::one_form(CoBasis::Dx, Rat::one());
        let trans = VectorField::on_j0(Rat::one(), vec![Rat::zero()])
            .prolong(4, &ctx, 12)
            .unwrap();
        assert!(dx.lie_derivative(&trans, &ctx, 12).unwrap().is_zero());

        // the SE(2) invariant horizontal form is annihilated by all three
        // prolonged generators
        let varpi = Form::one_form(CoBasis::Dx, parse(&ctx, "y2/(y1^2+1)^2").unwrap())
            .add(
                &Form::one_form(
                    CoBasis::Du { dep: 0, ord: 0 },
                    parse(&ctx, "y1*y2/(y1^2+1)^2").unwrap(),
                ),
                &ctx,
            )
            .unwrap()
            .to_contact_basis(&ctx, 12)
            .unwrap();
        let gens = vec![
            VectorField::on_j0(Rat::one(), vec![Rat::zero()]),
            VectorField::on_j0(Rat::zero(), vec![Rat::one()]),
            VectorField::on_j0(parse(&ctx, "-y").unwrap(), vec![parse(&ctx, "x").unwrap()]),
        ];
        for g in &gens {
            let gp = g.prolong(6, &ctx, 12).unwrap();
            let ld = varpi.lie_derivative(&gp, &ctx, 12).unwrap();
            assert!(ld.is_zero(), "not invariant: {:?}", ld);
        }

        // L_rot theta0 stays in the contact span
        let rot = gens[2].prolong(4, &ctx, 12).unwrap();
        let theta0 = Form::one_form(th(0, 0), Rat::one());
        let ld = theta0.lie_derivative(&rot, &ctx, 12).unwrap();
        assert!(!ld.is_zero());
        assert!(ld.is_contact());
        assert_eq!(ld.coeff(&[th(0, 0)]), parse(&ctx, "y1").unwrap());
    }

    #[test]
    fn total_derivative_dual_kills_contact() {
        let ctx = Ctx::jet(&["y", "z"]);
        let dx_field = VectorField::total_derivative_field(2);
        for dep in 0..2 {
            for ord in 0..4 {
                let t = Form::one_form(th(dep, ord), Rat::one());
                assert!(t.contract(&dx_field, &ctx).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn bicomplex_anticommutes_on_functions() {
        let ctx = Ctx::jet(&["y", "z"]);
        let f = parse(&ctx, "y2*z1^2/(1+y1*z3) + x*y1").unwrap();
        let (dh, dv) = split_dh_dv(&f, &ctx, 12).unwrap();
        let dhdv = dv.d(&ctx, 12).unwrap(); // d(dv f) = (dH + dV)(dV f); dV^2 = 0
        let dvdh = dh.d(&ctx, 12).unwrap();
        let sum = dhdv.add(&dvdh, &ctx).unwrap();
        // d^2 = 0 overall, and the (1,1)-parts are exactly dHdV + dVdH
        assert!(sum.is_zero(), "d^2 f != 0: {:?}", sum);
    }
}
