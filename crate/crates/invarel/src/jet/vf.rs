//! Vector fields on jet space and their prolongation by the classical
//! recurrence `phi^i_{j+1} = D_x(phi^i_j) - u^i_{j+1} D_x(xi)`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::ctx::{Ctx, VarKind};
use crate::expr::rat::Rat;
use crate::jet::form::CoBasis;
use crate::jet::{jet_support, total_derivative};

#[derive(Clone, Debug)]
pub struct VectorField {
    /// Coefficient of d/dx.
    pub xi: Rat,
    /// Coefficients of d/du^i_j, one map per dependent variable.
    pub phi: Vec<BTreeMap<u32, Rat>>,
    /// Highest order for which `phi` entries are valid.
    pub order: u32,
    /// The formal total-derivative field, whose pairings are exact at every
    /// order.
    pub is_total_derivative: bool,
}

impl VectorField {
    /// A field on J^0 from its `d/dx` and `d/du^i` coefficients.
    pub fn on_j0(xi: Rat, phis: Vec<Rat>) -> Self {
        let phi = phis
            .into_iter()
            .map(|p| {
                let mut m = BTreeMap::new();
                if !p.is_zero() {
                    m.insert(0, p);
                }
                m
            })
            .collect();
        VectorField {
            xi,
            phi,
            order: 0,
            is_total_derivative: false,
        }
    }

    pub fn total_derivative_field(n_deps: usize) -> Self {
        VectorField {
            xi: Rat::one(),
            phi: vec![BTreeMap::new(); n_deps],
            order: 0,
            is_total_derivative: true,
        }
    }

    pub fn phi_at(&self, dep: usize, ord: u32) -> Rat {
        self.phi
            .get(dep)
            .and_then(|m| m.get(&ord))
            .cloned()
            .unwrap_or_else(Rat::zero)
    }

    /// Prolong to order `k`; the input must be an order-0 field.
    pub fn prolong(&self, k: u32, ctx: &Ctx, max_ord: u32) -> Result<VectorField> {
        if self.is_total_derivative {
            return Ok(self.clone());
        }
        let mut out = self.clone();
        let dxi = total_derivative(&self.xi, ctx, max_ord)?;
        for dep in 0..ctx.n_deps() {
            let mut prev = out.phi_at(dep, 0);
            for j in 0..k {
                if j + 1 > max_ord {
                    return Err(Error::JetOrderExceeded(j + 1, max_ord));
                }
                let d_prev = total_derivative(&prev, ctx, max_ord)?;
                let u_next = Rat::var(ctx.dep(dep, j + 1));
                let next = d_prev.sub(&u_next.mul(&dxi, ctx)?, ctx)?;
                if !next.is_zero() {
                    out.phi[dep].insert(j + 1, next.clone());
                }
                prev = next;
            }
        }
        out.order = k;
        Ok(out)
    }

    /// Pair with a coframe element.
    pub fn pair_basis(&self, b: CoBasis, ctx: &Ctx) -> Result<Rat> {
        if self.is_total_derivative {
            return Ok(match b {
                CoBasis::Dx => Rat::one(),
                CoBasis::Theta { .. } => Rat::zero(),
                CoBasis::Du { dep, ord } => Rat::var(ctx.dep(dep, ord + 1)),
            });
        }
        match b {
            CoBasis::Dx => Ok(self.xi.clone()),
            CoBasis::Du { dep, ord } => Ok(self.phi_at(dep, ord)),
            CoBasis::Theta { dep, ord } => {
                // theta(X) = phi^i_j - u^i_{j+1} xi
                let t = Rat::var(ctx.dep(dep, ord + 1)).mul(&self.xi, ctx)?;
                self.phi_at(dep, ord).sub(&t, ctx)
            }
        }
    }

    /// Apply the (prolonged) field to a jet function.
    pub fn apply(&self, f: &Rat, ctx: &Ctx) -> Result<Rat> {
        let mut out = Rat::zero();
        for v in jet_support(f, ctx) {
            let coeff = match ctx.kind(v) {
                VarKind::X => {
                    if self.is_total_derivative {
                        Rat::one()
                    } else {
                        self.xi.clone()
                    }
                }
                VarKind::Dep { dep, ord } => {
                    if self.is_total_derivative {
                        Rat::var(ctx.dep(dep as usize, ord + 1))
                    } else {
                        if ord > self.order && !self.xi.is_zero() {
                            return Err(Error::ShapeMismatch(format!(
                                "field prolonged to order {} applied to a function of order {}",
                                self.order, ord
                            )));
                        }
                        self.phi_at(dep as usize, ord)
                    }
                }
                _ => continue,
            };
            if coeff.is_zero() {
                continue;
            }
            let pd = f.partial(v, ctx)?;
            if !pd.is_zero() {
                out = out.add(&pd.mul(&coeff, ctx)?, ctx)?;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse::parse;

    #[test]
    fn prolongation_examples() {
        let ctx = Ctx::jet(&["y"]);
        // rotation x d_y - y d_x
        let rot = VectorField::on_j0(
            parse(&ctx, "-y").unwrap(),
            vec![parse(&ctx, "x").unwrap()],
        );
        let r2 = rot.prolong(2, &ctx, 12).unwrap();
        assert_eq!(r2.phi_at(0, 1), parse(&ctx, "1+y1^2").unwrap());
        assert_eq!(r2.phi_at(0, 2), parse(&ctx, "3*y1*y2").unwrap());

        // scaling x d_x + y d_y
        let sc = VectorField::on_j0(
            parse(&ctx, "x").unwrap(),
            vec![parse(&ctx, "y").unwrap()],
        );
        let s2 = sc.prolong(2, &ctx, 12).unwrap();
        assert!(s2.phi_at(0, 1).is_zero());
        assert_eq!(s2.phi_at(0, 2), parse(&ctx, "-y2").unwrap());

        // translations prolong to themselves
        let tr = VectorField::on_j0(Rat::one(), vec![Rat::zero()]);
        let t5 = tr.prolong(5, &ctx, 12).unwrap();
        for j in 1..=5 {
            assert!(t5.phi_at(0, j).is_zero());
        }
    }
}
