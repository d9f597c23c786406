//! Abstract invariant expressions: rational functions in family symbols
//! `I^i_j` with the formal derivation `nabla: I^i_j -> I^i_{j+1}`, plus the
//! invariant Eulerian and Hamiltonian of a Lagrangian density.

use crate::error::{Error, Result};
use crate::expr::ctx::{Ctx, Var, VarKind, ORD_CAP};
use crate::expr::rat::Rat;

/// The formal derivation on invariant expressions: shifts family symbols and
/// passes through radicals by the chain rule.
pub fn nabla(e: &Rat, ctx: &Ctx) -> Result<Rat> {
    let mut out = Rat::zero();
    for v in e.support(ctx) {
        let img = match ctx.kind(v) {
            VarKind::Fam { fam, der } => {
                if der + 1 >= ORD_CAP {
                    return Err(Error::JetOrderExceeded(der + 1, ORD_CAP - 1));
                }
                Rat::var(ctx.fam(fam as usize, der + 1))
            }
            _ => {
                return Err(Error::NotPolynomial(format!(
                    "nabla on a non-invariant variable {}",
                    ctx.var_name(v)
                )))
            }
        };
        let pd = e.partial(v, ctx)?;
        if !pd.is_zero() {
            out = out.add(&pd.mul(&img, ctx)?, ctx)?;
        }
    }
    Ok(out)
}

pub fn nabla_pow(e: &Rat, k: u32, ctx: &Ctx) -> Result<Rat> {
    let mut out = e.clone();
    for _ in 0..k {
        out = nabla(&out, ctx)?;
    }
    Ok(out)
}

/// Highest derivative order of family `fam` appearing in `e`.
pub fn family_order(e: &Rat, fam: usize, ctx: &Ctx) -> Option<u32> {
    e.support(ctx)
        .into_iter()
        .filter_map(|v| match ctx.kind(v) {
            VarKind::Fam { fam: f, der } if f as usize == fam => Some(der),
            _ => None,
        })
        .max()
}

/// Invariant Eulerian: `E_i(L) = sum_j (-nabla)^j dL/dI^i_j`, one component
/// per family.
pub fn eulerian(l: &Rat, ctx: &Ctx) -> Result<Vec<Rat>> {
    let mut out = Vec::with_capacity(ctx.n_deps());
    for fam in 0..ctx.n_deps() {
        let top = family_order(l, fam, ctx);
        let mut acc = Rat::zero();
        if let Some(top) = top {
            for j in 0..=top {
                let pd = l.partial(ctx.fam(fam, j), ctx)?;
                if pd.is_zero() {
                    continue;
                }
                let mut term = nabla_pow(&pd, j, ctx)?;
                if j % 2 == 1 {
                    term = term.neg();
                }
                acc = acc.add(&term, ctx)?;
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// Invariant Hamiltonian:
/// `H(L) = sum_i sum_{j>k} I^i_{j-k} (-nabla)^k dL/dI^i_j - L`.
pub fn hamiltonian(l: &Rat, ctx: &Ctx) -> Result<Rat> {
    let mut acc = l.neg();
    for fam in 0..ctx.n_deps() {
        let Some(top) = family_order(l, fam, ctx) else {
            continue;
        };
        for j in 1..=top {
            let pd = l.partial(ctx.fam(fam, j), ctx)?;
            if pd.is_zero() {
                continue;
            }
            for k in 0..j {
                let mut term = nabla_pow(&pd, k, ctx)?;
                if k % 2 == 1 {
                    term = term.neg();
                }
                let shift = Rat::var(ctx.fam(fam, j - k));
                acc = acc.add(&term.mul(&shift, ctx)?, ctx)?;
            }
        }
    }
    Ok(acc)
}

/// `var` helper for tests and builders: family symbol by name.
pub fn sym(ctx: &Ctx, name: &str) -> Result<Var> {
    ctx.resolve_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse::parse;

    #[test]
    fn eulerian_examples() {
        // single family I, L = I0^m
        let ctx = Ctx::inv(&["I"]);
        for m in 1..=3i64 {
            let l = parse(&ctx, "I").unwrap().pow(m, &ctx).unwrap();
            let e = eulerian(&l, &ctx).unwrap();
            let expect = parse(&ctx, "I")
                .unwrap()
                .pow(m - 1, &ctx)
                .unwrap()
                .scale_q(&crate::q::qi(m));
            assert_eq!(e[0], expect);
        }

        // two families (kappa, tau): L = kappa and L = kappa^2
        let ctx = Ctx::inv(&["kappa", "tau"]);
        let e = eulerian(&parse(&ctx, "kappa").unwrap(), &ctx).unwrap();
        assert_eq!(e[0], Rat::one());
        assert!(e[1].is_zero());
        let e = eulerian(&parse(&ctx, "kappa^2").unwrap(), &ctx).unwrap();
        assert_eq!(e[0], parse(&ctx, "2*kappa").unwrap());
        assert!(e[1].is_zero());
    }

    #[test]
    fn hamiltonian_examples() {
        let ctx = Ctx::inv(&["q"]);
        // order-0 dependence: H(L) = -L
        let l = parse(&ctx, "q").unwrap();
        assert_eq!(hamiltonian(&l, &ctx).unwrap(), l.neg());

        // L = q1: j=1, k=0 term cancels against -L
        let l = parse(&ctx, "q1").unwrap();
        assert!(hamiltonian(&l, &ctx).unwrap().is_zero());

        let ctx = Ctx::inv(&["kappa", "tau"]);
        let l = parse(&ctx, "kappa^2").unwrap();
        assert_eq!(hamiltonian(&l, &ctx).unwrap(), l.neg());
    }

    #[test]
    fn nabla_shifts() {
        let ctx = Ctx::inv(&["I"]);
        let i0 = parse(&ctx, "I").unwrap();
        assert_eq!(nabla(&i0, &ctx).unwrap(), parse(&ctx, "I1").unwrap());
        let e = parse(&ctx, "I^2*I1").unwrap();
        assert_eq!(
            nabla(&e, &ctx).unwrap(),
            parse(&ctx, "2*I*I1^2 + I^2*I2").unwrap()
        );
    }
}
