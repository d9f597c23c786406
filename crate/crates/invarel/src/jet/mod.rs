//! The coordinate variational bicomplex on jets of curves: total derivative,
//! contact forms, prolongation of vector fields, Lie derivatives and the
//! horizontal/vertical splitting.

pub mod form;
pub mod vf;

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::expr::ctx::{Ctx, Var, VarKind};
use crate::expr::rat::Rat;

pub use form::{CoBasis, Form};
pub use vf::VectorField;

/// Jet variables `e` depends on, including through radical bases.
pub fn jet_support(e: &Rat, ctx: &Ctx) -> BTreeSet<Var> {
    e.support(ctx)
}

/// Highest jet order appearing in `e` (through radical bases as well).
pub fn jet_order(e: &Rat, ctx: &Ctx) -> u32 {
    jet_support(e, ctx)
        .into_iter()
        .filter_map(|v| match ctx.kind(v) {
            VarKind::Dep { ord, .. } => Some(ord),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

/// Total derivative `D_x(e) = de/dx + sum u^i_{j+1} de/du^i_j`, with radicals
/// differentiated through their bases.
pub fn total_derivative(e: &Rat, ctx: &Ctx, max_ord: u32) -> Result<Rat> {
    let mut out = Rat::zero();
    for v in jet_support(e, ctx) {
        let dv = match ctx.kind(v) {
            VarKind::X => Rat::one(),
            VarKind::Dep { dep, ord } => {
                if ord + 1 > max_ord {
                    return Err(Error::JetOrderExceeded(ord + 1, max_ord));
                }
                Rat::var(ctx.dep(dep as usize, ord + 1))
            }
            _ => continue,
        };
        let pd = e.partial(v, ctx)?;
        if !pd.is_zero() {
            out = out.add(&pd.mul(&dv, ctx)?, ctx)?;
        }
    }
    Ok(out)
}

/// `d f = d_H f + d_V f` with `d_H f = D_x(f) dx` and
/// `d_V f = sum (df/du^i_j) theta^i_j`.
pub fn split_dh_dv(f: &Rat, ctx: &Ctx, max_ord: u32) -> Result<(Form, Form)> {
    let dh = Form::one_form(CoBasis::Dx, total_derivative(f, ctx, max_ord)?);
    let mut dv = Form::zero(1);
    for v in jet_support(f, ctx) {
        if let VarKind::Dep { dep, ord } = ctx.kind(v) {
            let c = f.partial(v, ctx)?;
            if !c.is_zero() {
                dv = dv.add(
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
    Ok((dh, dv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse::parse;

    #[test]
    fn total_derivative_basics() {
        let mut ctx = Ctx::jet(&["y"]);
        let e = parse(&ctx, "y1^2").unwrap();
        assert_eq!(
            total_derivative(&e, &ctx, 12).unwrap(),
            parse(&ctx, "2*y1*y2").unwrap()
        );

        ctx.adjoin_radical("ell", 2, parse(&ctx, "1+y1^2").unwrap())
            .unwrap();
        let l = parse(&ctx, "ell").unwrap();
        assert_eq!(
            total_derivative(&l, &ctx, 12).unwrap(),
            parse(&ctx, "y1*y2/ell").unwrap()
        );
    }

    #[test]
    fn se2_first_invariant_derivative() {
        // gamma D_x applied to I0 equals the hand-expanded I1
        let ctx = Ctx::jet(&["y"]);
        let i0 = parse(&ctx, "y2^2/(y1^2+1)^3").unwrap();
        let gamma = parse(&ctx, "(y1^2+1)/y2").unwrap();
        let d = total_derivative(&i0, &ctx, 12).unwrap();
        let i1 = gamma.mul(&d, &ctx).unwrap();
        let expect = parse(
            &ctx,
            "((2*y2*y3*(y1^2+1) - 6*y1*y2^3)/(y1^2+1)^4) * ((y1^2+1)/y2)",
        )
        .unwrap();
        assert_eq!(i1, expect);
    }

    #[test]
    fn order_bound_is_hard_error() {
        let ctx = Ctx::jet(&["y"]);
        let e = parse(&ctx, "y3").unwrap();
        assert!(matches!(
            total_derivative(&e, &ctx, 3),
            Err(Error::JetOrderExceeded(4, 3))
        ));
    }

    #[test]
    fn split_examples() {
        let ctx = Ctx::jet(&["y"]);
        let f = parse(&ctx, "y1").unwrap();
        let (dh, dv) = split_dh_dv(&f, &ctx, 12).unwrap();
        assert_eq!(dh, Form::one_form(CoBasis::Dx, parse(&ctx, "y2").unwrap()));
        assert_eq!(
            dv,
            Form::one_form(CoBasis::Theta { dep: 0, ord: 1 }, Rat::one())
        );

        let x = parse(&ctx, "x").unwrap();
        let (dh, dv) = split_dh_dv(&x, &ctx, 12).unwrap();
        assert_eq!(dh, Form::one_form(CoBasis::Dx, Rat::one()));
        assert!(dv.is_zero());

        // d_V I0 coefficients
        let i0 = parse(&ctx, "y2^2/(y1^2+1)^3").unwrap();
        let (_, dv) = split_dh_dv(&i0, &ctx, 12).unwrap();
        let c1 = dv
            .terms
            .get(&vec![CoBasis::Theta { dep: 0, ord: 1 }])
            .unwrap();
        let c2 = dv
            .terms
            .get(&vec![CoBasis::Theta { dep: 0, ord: 2 }])
            .unwrap();
        assert_eq!(c1, &parse(&ctx, "-6*y1*y2^2/(y1^2+1)^4").unwrap());
        assert_eq!(c2, &parse(&ctx, "2*y2/(y1^2+1)^3").unwrap());
    }
}
