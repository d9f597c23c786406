//! Steps 3 and 6: invariant vertical differentials of the generating
//! invariants and of varpi, rewritten through the table into the A and B
//! operators.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::ctx::VarKind;
use crate::expr::rat::Rat;
use crate::geometry::{restrict_to_section, Geometry};
use crate::jet::jet_support;
use crate::ops::{DiffOp, DiffOpMatrix, InvField};

use super::frame::{FrameData, InvContact};
use super::rewrite::RewriteTable;
use super::Options;

#[derive(Clone, Debug)]
pub struct ABData {
    /// A: rows = invariant families, cols = contact directions.
    pub a: DiffOpMatrix<InvField>,
    /// B: one operator per contact direction.
    pub b: Vec<DiffOp<InvField>>,
    pub a_star: DiffOpMatrix<InvField>,
    pub b_star: Vec<DiffOp<InvField>>,
}

/// The invariant vertical differential of the family seed as an abstract
/// contact form: `c_i d_V I_i = iota(d_V f) + sum_k iota(X_k f) eps^k`.
pub fn dv_invariant(
    geo: &Geometry,
    frame: &mut FrameData,
    fam: usize,
    opts: &Options,
) -> Result<InvContact> {
    let jet_ctx = &geo.jet_ctx;
    let inv_ctx = &geo.inv_ctx;
    let decl = &geo.invariants[fam];
    let f = decl
        .iota_of
        .clone()
        .or_else(|| decl.expr.clone())
        .ok_or_else(|| Error::Config(format!("invariant `{}` has no seed", decl.name)))?;
    let ord = crate::jet::jet_order(&f, jet_ctx);
    super::frame::extend_nu(frame, geo, ord + 1, opts)?;

    let mut out = InvContact::zero();
    for v in jet_support(&f, jet_ctx) {
        if let VarKind::Dep { dep, ord } = jet_ctx.kind(v) {
            let pd = f.partial(v, jet_ctx)?;
            if pd.is_zero() {
                continue;
            }
            let r = restrict_to_section(&pd, geo)?;
            let c = frame.nu.translate(&r, jet_ctx, inv_ctx)?;
            if !c.is_zero() {
                out = out.add(
                    &InvContact::basis(dep as usize, ord).scale(&c, inv_ctx)?,
                    inv_ctx,
                )?;
            }
        }
    }
    for (k, xk) in frame.prolonged.iter().enumerate() {
        let xf = xk.apply(&f, jet_ctx)?;
        if xf.is_zero() {
            continue;
        }
        let r = restrict_to_section(&xf, geo)?;
        let c = frame.nu.translate(&r, jet_ctx, inv_ctx)?;
        if c.is_zero() {
            continue;
        }
        out = out.add(&frame.eps[k].scale(&c, inv_ctx)?, inv_ctx)?;
    }
    // divide by the declared iota constant
    let inv = Rat::from_q(crate::q::Q::from_integer(1.into()) / geo.iota_const[fam].clone());
    out.scale(&inv, inv_ctx)
}

/// The contact form Phi with `d_V varpi = Phi ^ varpi`, from
/// `varpi = s iota(dx)`.
pub fn dv_varpi(geo: &Geometry, frame: &mut FrameData, opts: &Options) -> Result<InvContact> {
    let jet_ctx = &geo.jet_ctx;
    let inv_ctx = &geo.inv_ctx;
    super::frame::extend_nu(frame, geo, 2, opts)?;
    let mut out = InvContact::zero();
    for (k, xk) in frame.prolonged.iter().enumerate() {
        let xi = &xk.xi;
        if xi.is_zero() {
            continue;
        }
        // eps^k * iota(D_x xi_k)
        let dxi = crate::jet::total_derivative(xi, jet_ctx, opts.max_jet_order)?;
        if !dxi.is_zero() {
            let r = restrict_to_section(&dxi, geo)?;
            let c = frame.nu.translate(&r, jet_ctx, inv_ctx)?;
            if !c.is_zero() {
                out = out.add(&frame.eps[k].scale(&c, inv_ctx)?, inv_ctx)?;
            }
        }
        // - g_k * sum_d iota(d xi_k / d u^d) iota(theta^d_0)
        if frame.g[k].is_zero() {
            continue;
        }
        for dep in 0..geo.n_contact() {
            let pd = xi.partial(jet_ctx.dep(dep, 0), jet_ctx)?;
            if pd.is_zero() {
                continue;
            }
            let r = restrict_to_section(&pd, geo)?;
            let c = frame.nu.translate(&r, jet_ctx, inv_ctx)?;
            if c.is_zero() {
                continue;
            }
            let factor = frame.g[k].mul(&c, inv_ctx)?.neg();
            out = out.add(&InvContact::basis(dep, 0).scale(&factor, inv_ctx)?, inv_ctx)?;
        }
    }
    Ok(out)
}

/// Assemble A and B from the vertical differentials and the rewrite table,
/// in the geometry's declared order-0 coframe.
pub fn compute_ab(
    geo: &Geometry,
    frame: &mut FrameData,
    table: &RewriteTable,
    opts: &Options,
) -> Result<ABData> {
    let inv_ctx = &geo.inv_ctx;
    let field = InvField {
        ctx: Arc::clone(&geo.inv_ctx),
    };
    let n_fam = geo.invariants.len();
    let n_dir = geo.n_contact();

    let scale_inv: Vec<Rat> = (0..n_dir)
        .map(|l| {
            geo.coframe_iota_scale
                .get(l)
                .cloned()
                .unwrap_or_else(Rat::one)
                .inverse(inv_ctx)
        })
        .collect::<Result<_>>()?;

    let mut a_entries = Vec::with_capacity(n_fam * n_dir);
    for fam in 0..n_fam {
        let dv = dv_invariant(geo, frame, fam, opts)?;
        let row = table.collect(&dv, geo)?;
        for (l, op) in row.into_iter().enumerate() {
            // vartheta^l = scale_l iota(theta^l_0): compose with the constant
            a_entries.push(op.compose(&DiffOp::mult(field.clone(), scale_inv[l].clone()))?);
        }
    }
    let a = DiffOpMatrix::new(n_fam, n_dir, a_entries)?;

    let phi = dv_varpi(geo, frame, opts)?;
    let b_raw = table.collect(&phi, geo)?;
    let mut b = Vec::with_capacity(n_dir);
    for (l, op) in b_raw.into_iter().enumerate() {
        b.push(op.compose(&DiffOp::mult(field.clone(), scale_inv[l].clone()))?);
    }

    let a_star = a.adjoint()?;
    let b_star = b
        .iter()
        .map(|op| op.adjoint())
        .collect::<Result<Vec<_>>>()?;
    Ok(ABData { a, b, a_star, b_star })
}
