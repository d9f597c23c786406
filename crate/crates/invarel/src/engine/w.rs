//! The matrix relative invariant W: explicit jet expressions for the
//! order-0 invariant contact forms (via the symbol construction applied to
//! explicit invariants, normalised on the cross-section) paired against the
//! horizontal coefficient of varpi.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::ctx::VarKind;
use crate::expr::rat::Rat;
use crate::expr::solve::solve_linear;
use crate::geometry::{restrict_to_section, CoframeSpec, Geometry};
use crate::jet::form::{CoBasis, Form};
use crate::jet::{jet_order, total_derivative};

use super::frame::{solve_maurer_cartan, FrameData};
use super::Options;

/// Explicit realization of an invariant family symbol by iterated
/// application of `gamma D_x` to the declared expression.
pub fn realize_symbol(geo: &Geometry, fam: usize, der: u32, opts: &Options) -> Result<Rat> {
    let ctx = &geo.jet_ctx;
    let gamma = geo
        .gamma
        .clone()
        .ok_or_else(|| Error::Config("realization needs an explicit derivation".into()))?;
    let mut cur = geo.invariants[fam]
        .expr
        .clone()
        .ok_or_else(|| Error::Config(format!("`{}` has no explicit expression", geo.invariants[fam].name)))?;
    for _ in 0..der {
        cur = gamma.mul(&total_derivative(&cur, ctx, opts.max_jet_order)?, ctx)?;
    }
    Ok(cur)
}

/// Realize a full invariant expression as a jet expression.
pub fn realize_expr(geo: &Geometry, e: &Rat, opts: &Options) -> Result<Rat> {
    let inv_ctx = &geo.inv_ctx;
    let jet_ctx = &geo.jet_ctx;
    let mut map: BTreeMap<crate::expr::ctx::Var, Rat> = BTreeMap::new();
    for v in e.support(inv_ctx) {
        if let VarKind::Fam { fam, der } = inv_ctx.kind(v) {
            if fam as usize >= geo.invariants.len() {
                return Err(Error::DictionaryIncomplete("helper in realization".into()));
            }
            map.insert(v, realize_symbol(geo, fam as usize, der, opts)?);
        }
    }
    for (idx, _) in inv_ctx.radicals.iter().enumerate() {
        let rv = inv_ctx.radical_var(idx);
        if e.contains_var(rv) {
            let r = geo
                .inv_radical_realize
                .get(idx)
                .cloned()
                .flatten()
                .ok_or_else(|| {
                    Error::DictionaryIncomplete(format!(
                        "invariant radical `{}` has no jet realization",
                        inv_ctx.radicals[idx].name
                    ))
                })?;
            map.insert(rv, r);
        }
    }
    let conv = |p: &crate::expr::poly::Poly| -> Result<Rat> {
        let mut acc = Rat::zero();
        for (m, c) in &p.terms {
            let mut t = Rat::from_q(c.clone());
            for &(v, ex) in &m.0 {
                let img = map
                    .get(&v)
                    .ok_or_else(|| Error::DictionaryIncomplete("unmapped symbol".into()))?;
                t = t.mul(&img.pow(ex as i64, jet_ctx)?, jet_ctx)?;
            }
            acc = acc.add(&t, jet_ctx)?;
        }
        Ok(acc)
    };
    conv(&e.num)?.div(&conv(&e.den)?, jet_ctx)
}

/// Explicit jet expressions for `iota(theta^d_0)`, one per contact
/// direction, built from the coframe candidates.
pub fn iota_theta_explicit(
    geo: &Geometry,
    frame: Option<&mut FrameData>,
    opts: &Options,
) -> Result<Vec<Form>> {
    let ctx = &geo.jet_ctx;
    let n = geo.n_contact();
    if geo.candidates.len() != n {
        return Err(Error::Config(format!(
            "{} coframe candidates for {} contact directions",
            geo.candidates.len(),
            n
        )));
    }
    let gamma = geo
        .gamma
        .clone()
        .ok_or_else(|| Error::Config("candidates need an explicit derivation".into()))?;
    let mut cand_forms = Vec::with_capacity(n);
    let mut all_normalized = true;
    for (expr, k, normalized) in &geo.candidates {
        if jet_order(expr, ctx) != *k {
            return Err(Error::Config(format!(
                "candidate order mismatch: declared {k}, actual {}",
                jet_order(expr, ctx)
            )));
        }
        let gk = gamma.pow(*k as i64, ctx)?.inverse(ctx)?;
        let mut f = Form::zero(1);
        for j in 0..n {
            let a = expr.partial(ctx.dep(j, *k), ctx)?;
            if !a.is_zero() {
                f = f.add(
                    &Form::one_form(CoBasis::Theta { dep: j, ord: 0 }, a.mul(&gk, ctx)?),
                    ctx,
                )?;
            }
        }
        all_normalized &= normalized;
        cand_forms.push(f);
    }
    if all_normalized {
        return Ok(cand_forms);
    }
    // normalise: candidates restricted to the cross-section give an
    // invertible matrix over the invariants; iota(theta^d_0) = sum_i
    // (M^{-1})_{d,i} cand_i with the inverse realized in jets
    let frame = match frame {
        Some(f) => f.clone(),
        None => solve_maurer_cartan(geo, opts)?,
    };
    let inv_ctx = &geo.inv_ctx;
    let mut m_rows = Vec::with_capacity(n);
    for f in &cand_forms {
        let mut row = Vec::with_capacity(n);
        for d in 0..n {
            let c = f.coeff(&[CoBasis::Theta { dep: d, ord: 0 }]);
            let r = restrict_to_section(&c, geo)?;
            row.push(frame.nu.translate(&r, ctx, inv_ctx)?);
        }
        m_rows.push(row);
    }
    // solve M^T x = e_d for each direction: iota(theta^d) = sum_i x_i cand_i
    let mt: Vec<Vec<Rat>> = (0..n)
        .map(|i| (0..n).map(|j| m_rows[j][i].clone()).collect())
        .collect();
    let mut rhs = vec![vec![Rat::zero(); n]; n];
    for (d, row) in rhs.iter_mut().enumerate() {
        row[d] = Rat::one();
    }
    let sol = solve_linear(&mt, &rhs, inv_ctx)
        .map_err(|e| Error::DegenerateSymbolMatrix(format!("candidate matrix: {e}")))?;
    let mut out = Vec::with_capacity(n);
    for d in 0..n {
        let mut f = Form::zero(1);
        for i in 0..n {
            let coeff = &sol[i][d];
            if coeff.is_zero() {
                continue;
            }
            let cj = realize_expr(geo, coeff, opts)?;
            f = f.add(&cand_forms[i].scale(&cj, ctx)?, ctx)?;
        }
        out.push(f);
    }
    Ok(out)
}

/// `vartheta_0^j ^ varpi = W^j_k theta_0^k ^ dx (mod contact^2)`.
pub fn compute_w(
    geo: &Geometry,
    frame: Option<&mut FrameData>,
    opts: &Options,
) -> Result<Vec<Vec<Rat>>> {
    let ctx = &geo.jet_ctx;
    let n = geo.n_contact();
    let explicit_pair = match &geo.coframe {
        CoframeSpec::Explicit { varpi, thetas } => Some((varpi.clone(), thetas.clone())),
        CoframeSpec::Construct => {
            let (v, t, _) = crate::geometry::build_global_coframe(geo, opts.max_jet_order)?;
            Some((v, t))
        }
        CoframeSpec::Invariantize => None,
    };
    match explicit_pair {
        Some((varpi, thetas)) => {
            let h = varpi.coeff(&[CoBasis::Dx]);
            let mut w = Vec::with_capacity(n);
            for t in &thetas {
                let mut row = Vec::with_capacity(n);
                for d in 0..n {
                    let a = t.coeff(&[CoBasis::Theta { dep: d, ord: 0 }]);
                    row.push(a.mul(&h, ctx)?);
                }
                w.push(row);
            }
            Ok(w)
        }
        None => {
            if geo.candidates.is_empty() {
                return Err(Error::Config(format!(
                    "geometry `{}` has no explicit coframe data for W",
                    geo.name
                )));
            }
            let gamma = geo
                .gamma
                .clone()
                .ok_or_else(|| Error::Config("W needs an explicit derivation".into()))?;
            let h = gamma.inverse(ctx)?;
            let iotas = iota_theta_explicit(geo, frame, opts)?;
            let mut w = Vec::with_capacity(n);
            for j in 0..n {
                let scale = geo
                    .coframe_iota_scale
                    .get(j)
                    .cloned()
                    .unwrap_or_else(Rat::one);
                let srj = realize_expr(geo, &scale, opts)?;
                let mut row = Vec::with_capacity(n);
                for d in 0..n {
                    let a = iotas[j].coeff(&[CoBasis::Theta { dep: d, ord: 0 }]);
                    row.push(a.mul(&srj, ctx)?.mul(&h, ctx)?);
                }
                w.push(row);
            }
            Ok(w)
        }
    }
}
