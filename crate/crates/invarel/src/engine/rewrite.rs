//! Steps 4-5: express every invariantized contact form `iota(theta^i_j)` as
//! invariant differential operators acting on the order-0 forms. Two routes
//! compute the same table: the direct recurrence over abstract symbols, and
//! the on-cross-section route that keeps every coefficient restricted.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::ctx::VarKind;
use crate::expr::rat::Rat;
use crate::expr::solve::solve_linear;
use crate::geometry::{restrict_form_to_section, restrict_to_section, Geometry};
use crate::jet::form::{CoBasis, Form};
use crate::ops::{DiffOp, InvField};

use super::frame::{FrameData, InvContact};
use super::Options;

/// Rows indexed by `(dep, ord)`: operators on the `iota(theta^l_0)` basis in
/// powers of the geometry's declared derivation.
#[derive(Clone, Debug)]
pub struct RewriteTable {
    pub field: InvField,
    pub rows: BTreeMap<(usize, u32), Vec<DiffOp<InvField>>>,
    pub max_order: u32,
}

impl RewriteTable {
    /// Substitute the table into an abstract contact form, producing one
    /// operator per contact direction.
    pub fn collect(&self, form: &InvContact, geo: &Geometry) -> Result<Vec<DiffOp<InvField>>> {
        let n = geo.n_contact();
        let mut out = vec![DiffOp::zero(self.field.clone()); n];
        for ((dep, ord), c) in &form.terms {
            let row = self.rows.get(&(*dep, *ord)).ok_or_else(|| {
                Error::RemainderNonzero(format!(
                    "iota(theta^{dep}_{ord}) is outside the rewrite table (order {})",
                    self.max_order
                ))
            })?;
            for l in 0..n {
                out[l] = out[l].add(&row[l].scale(c)?)?;
            }
        }
        Ok(out)
    }
}

/// The contact components of `L_{X_k} theta^dep_ord` in coordinates.
fn lie_contact_components(
    geo: &Geometry,
    k: usize,
    dep: usize,
    ord: u32,
    frame: &FrameData,
    opts: &Options,
) -> Result<Vec<((usize, u32), Rat)>> {
    let ctx = &geo.jet_ctx;
    let theta = Form::one_form(CoBasis::Theta { dep, ord }, Rat::one());
    let ld = theta.lie_derivative(&frame.prolonged[k], ctx, opts.max_jet_order)?;
    if !ld.is_contact() {
        return Err(Error::Config(format!(
            "prolongation of generator {k} does not preserve the contact ideal"
        )));
    }
    let mut out = Vec::new();
    for (w, c) in &ld.terms {
        match w.as_slice() {
            [CoBasis::Theta { dep: d, ord: o }] => out.push(((*d, *o), c.clone())),
            _ => unreachable!("contact 1-form"),
        }
    }
    Ok(out)
}

/// Direct route: `iota(theta^i_{j+1}) = D' iota(theta^i_j) - sum_k g_k
/// iota(L_{X_k} theta^i_j)` with `D' = s * nabla`, inverted into a
/// triangular table.
pub fn contact_rewrite(
    geo: &Geometry,
    frame: &mut FrameData,
    max_order: u32,
    opts: &Options,
) -> Result<RewriteTable> {
    let inv_ctx = &geo.inv_ctx;
    let field = InvField {
        ctx: Arc::clone(&geo.inv_ctx),
    };
    super::frame::extend_nu(frame, geo, max_order + 1, opts)?;
    let n = geo.n_contact();
    let mut rows: BTreeMap<(usize, u32), Vec<DiffOp<InvField>>> = BTreeMap::new();
    for dep in 0..n {
        let mut row = vec![DiffOp::zero(field.clone()); n];
        row[dep] = DiffOp::mult(field.clone(), Rat::one());
        rows.insert((dep, 0), row);
    }
    for ord in 0..max_order {
        for dep in 0..n {
            let cur = rows.get(&(dep, ord)).unwrap().clone();
            // D' ∘ row, with the constant varpi scale folded in
            let mut next: Vec<DiffOp<InvField>> = Vec::with_capacity(n);
            for l in 0..n {
                let der = DiffOp::derivation(field.clone(), 1)
                    .scale(&geo.varpi_scale)?
                    .compose(&cur[l])?;
                next.push(der);
            }
            for k in 0..geo.generators.len() {
                if frame.g[k].is_zero() {
                    continue;
                }
                for ((d2, o2), coeff) in
                    lie_contact_components(geo, k, dep, ord, frame, opts)?
                {
                    let r = restrict_to_section(&coeff, geo)?;
                    let c = frame.nu.translate(&r, &geo.jet_ctx, inv_ctx)?;
                    if c.is_zero() {
                        continue;
                    }
                    let factor = frame.g[k].mul(&c, inv_ctx)?;
                    let sub = rows.get(&(d2, o2)).ok_or_else(|| {
                        Error::Config(format!(
                            "rewrite recurrence needs iota(theta^{d2}_{o2}) before ({dep},{})",
                            ord + 1
                        ))
                    })?;
                    for l in 0..n {
                        next[l] = next[l].sub(&sub[l].scale(&factor)?)?;
                    }
                }
            }
            rows.insert((dep, ord + 1), next);
        }
    }
    Ok(RewriteTable {
        field,
        rows,
        max_order,
    })
}

/// On-cross-section route (the restriction trick): track the restrictions of
/// `iota(theta^i_j)` and of the chains `D'^m iota(theta^l_0)` as explicit
/// contact forms over the free coordinates, then match them.
pub fn contact_rewrite_on_section(
    geo: &Geometry,
    frame: &mut FrameData,
    max_order: u32,
    opts: &Options,
) -> Result<RewriteTable> {
    let jet_ctx = &geo.jet_ctx;
    let inv_ctx = &geo.inv_ctx;
    let field = InvField {
        ctx: Arc::clone(&geo.inv_ctx),
    };
    super::frame::extend_nu(frame, geo, max_order + 1, opts)?;
    let n = geo.n_contact();

    // rho(g_k): the gamma coefficients realized on the section
    let rho_g: Vec<Rat> = frame
        .g
        .iter()
        .map(|g| realize_on_section(g, geo, frame))
        .collect::<Result<_>>()?;
    let s_on_section = realize_on_section(&geo.varpi_scale, geo, frame)?;

    // one D'-step of an invariant contact form given by its restriction
    let step = |restr: &Form| -> Result<Form> {
        // D_x of the trivial extension plus the gamma corrections
        let ext = restr.clone();
        let mut d = lie_dx_contact(&ext, geo, opts)?;
        for (k, gk) in rho_g.iter().enumerate() {
            if gk.is_zero() {
                continue;
            }
            let ld = ext.lie_derivative(&frame.prolonged[k], jet_ctx, opts.max_jet_order)?;
            if !ld.is_contact() {
                return Err(Error::Config("generator breaks contact ideal".into()));
            }
            d = d.add(&ld.scale(gk, jet_ctx)?, jet_ctx)?;
        }
        restrict_form_to_section(&d, geo)
    };

    // chains V^l_m = restriction of D'^m iota(theta^l_0)
    let mut chains: Vec<Vec<Form>> = Vec::with_capacity(n);
    for l in 0..n {
        let mut chain = vec![Form::one_form(
            CoBasis::Theta { dep: l, ord: 0 },
            Rat::one(),
        )];
        for _ in 0..max_order {
            let next = step(chain.last().unwrap())?;
            chain.push(next);
        }
        chains.push(chain);
    }

    // restrictions T^i_j of iota(theta^i_j)
    let mut t: BTreeMap<(usize, u32), Form> = BTreeMap::new();
    for dep in 0..n {
        t.insert(
            (dep, 0),
            Form::one_form(CoBasis::Theta { dep, ord: 0 }, Rat::one()),
        );
    }
    for ord in 0..max_order {
        for dep in 0..n {
            let cur = t.get(&(dep, ord)).unwrap().clone();
            let mut next = step(&cur)?;
            for (k, gk) in rho_g.iter().enumerate() {
                if gk.is_zero() {
                    continue;
                }
                for ((d2, o2), coeff) in
                    lie_contact_components(geo, k, dep, ord, frame, opts)?
                {
                    let r = restrict_to_section(&coeff, geo)?;
                    if r.is_zero() {
                        continue;
                    }
                    let sub = t.get(&(d2, o2)).ok_or_else(|| {
                        Error::Config("on-section recurrence ordering".into())
                    })?;
                    let piece = sub.scale(&gk.mul(&r, jet_ctx)?, jet_ctx)?;
                    next = next.sub(&piece, jet_ctx)?;
                }
            }
            t.insert((dep, ord + 1), next);
        }
    }
    let _ = s_on_section;

    // match T^i_j against the chains, top order down
    let mut rows: BTreeMap<(usize, u32), Vec<DiffOp<InvField>>> = BTreeMap::new();
    for ((dep, ord), form) in &t {
        let mut residual = form.clone();
        let mut coeffs: Vec<Vec<Rat>> = vec![vec![Rat::zero(); *ord as usize + 1]; n];
        for m in (0..=*ord).rev() {
            // coefficients of theta^d_m in residual vs the chains at level m
            let mut mat = vec![vec![Rat::zero(); n]; n];
            let mut rhs = vec![vec![Rat::zero(); 1]; n];
            for d in 0..n {
                for l in 0..n {
                    mat[d][l] =
                        chains[l][m as usize].coeff(&[CoBasis::Theta { dep: d, ord: m }]);
                }
                rhs[d][0] = residual.coeff(&[CoBasis::Theta { dep: d, ord: m }]);
            }
            let sol = solve_linear(&mat, &rhs, jet_ctx)?;
            for l in 0..n {
                let c = sol[l][0].clone();
                if c.is_zero() {
                    continue;
                }
                residual =
                    residual.sub(&chains[l][m as usize].scale(&c, jet_ctx)?, jet_ctx)?;
                coeffs[l][m as usize] = c;
            }
        }
        if !residual.is_zero() {
            return Err(Error::RemainderNonzero(format!(
                "on-section match left a remainder for iota(theta^{dep}_{ord})"
            )));
        }
        // translate the on-section coefficients into invariants
        let mut row = Vec::with_capacity(n);
        for cl in coeffs {
            let inv_coeffs = cl
                .into_iter()
                .map(|c| frame.nu.translate(&c, jet_ctx, inv_ctx))
                .collect::<Result<Vec<_>>>()?;
            // chains are powers of D' = s nabla; rewrite in nabla
            let mut op = DiffOp::zero(field.clone());
            for (m, c) in inv_coeffs.into_iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let spow = geo.varpi_scale.pow(m as i64, inv_ctx)?;
                let mut v = vec![Rat::zero(); m + 1];
                v[m] = c.mul(&spow, inv_ctx)?;
                op = op.add(&DiffOp::from_coeffs(field.clone(), v))?;
            }
            row.push(op);
        }
        rows.insert((*dep, *ord), row);
    }
    Ok(RewriteTable {
        field,
        rows,
        max_order,
    })
}

/// Realize an invariant expression on the cross-section (forward direction
/// of the dictionary).
pub fn realize_on_section(e: &Rat, geo: &Geometry, frame: &FrameData) -> Result<Rat> {
    let inv_ctx = &geo.inv_ctx;
    let jet_ctx = &geo.jet_ctx;
    let mut map: BTreeMap<crate::expr::ctx::Var, Rat> = BTreeMap::new();
    for v in e.support(inv_ctx) {
        match inv_ctx.kind(v) {
            VarKind::Fam { fam, der } => {
                let fam = fam as usize;
                if fam >= geo.invariants.len() {
                    return Err(Error::DictionaryIncomplete(
                        "helper symbol in realized expression".into(),
                    ));
                }
                let val = rho_invariant(geo, frame, fam, der)?;
                map.insert(v, val);
            }
            _ => {}
        }
    }
    // invariant-side radicals realize through the declared jet expressions
    for (idx, _r) in inv_ctx.radicals.iter().enumerate() {
        let rv = inv_ctx.radical_var(idx);
        if e.contains_var(rv) || radical_needed(e, inv_ctx, idx) {
            let realize = geo
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
            let restricted = restrict_to_section(&realize, geo)?;
            map.insert(rv, restricted);
        }
    }
    translate_inv_to_jet(e, inv_ctx, jet_ctx, &map)
}

fn radical_needed(e: &Rat, ctx: &crate::expr::ctx::Ctx, idx: usize) -> bool {
    // radicals referenced through higher radical bases
    for (j, r) in ctx.radicals.iter().enumerate() {
        if j > idx && r.base.contains_var(ctx.radical_var(idx)) && e.contains_var(ctx.radical_var(j))
        {
            return true;
        }
    }
    false
}

fn translate_inv_to_jet(
    e: &Rat,
    inv_ctx: &crate::expr::ctx::Ctx,
    jet_ctx: &crate::expr::ctx::Ctx,
    map: &BTreeMap<crate::expr::ctx::Var, Rat>,
) -> Result<Rat> {
    let conv = |p: &crate::expr::poly::Poly| -> Result<Rat> {
        let mut acc = Rat::zero();
        for (m, c) in &p.terms {
            let mut t = Rat::from_q(c.clone());
            for &(v, ex) in &m.0 {
                let img = map.get(&v).ok_or_else(|| {
                    Error::DictionaryIncomplete(format!(
                        "no jet realization for `{}`",
                        inv_ctx.var_name(v)
                    ))
                })?;
                t = t.mul(&img.pow(ex as i64, jet_ctx)?, jet_ctx)?;
            }
            acc = acc.add(&t, jet_ctx)?;
        }
        Ok(acc)
    };
    let n = conv(&e.num)?;
    let d = conv(&e.den)?;
    n.div(&d, jet_ctx)
}

/// `rho(I^fam_der)`: the invariant realized on the section, built from the
/// iota seeds by the on-section function recurrence.
fn rho_invariant(geo: &Geometry, frame: &FrameData, fam: usize, der: u32) -> Result<Rat> {
    let jet_ctx = &geo.jet_ctx;
    let decl = &geo.invariants[fam];
    let seed = decl
        .iota_of
        .as_ref()
        .or(decl.expr.as_ref())
        .ok_or_else(|| Error::DictionaryIncomplete(format!("no seed for `{}`", decl.name)))?;
    let mut cur = restrict_to_section(seed, geo)?
        .scale_q(&(crate::q::Q::from_integer(1.into()) / geo.iota_const[fam].clone()));
    // D' on section, iterated `der` times
    for _ in 0..der {
        cur = dprime_on_section(&cur, geo, frame)?;
    }
    // the declared derivation is nabla; D'^der = s^der nabla^der, so divide
    let s = realize_scale(geo, frame)?;
    if !s.is_one() {
        let spow = s.pow(der as i64, jet_ctx)?;
        cur = cur.div(&spow, jet_ctx)?;
    }
    Ok(cur)
}

fn realize_scale(geo: &Geometry, frame: &FrameData) -> Result<Rat> {
    if geo.varpi_scale.is_one() {
        return Ok(Rat::one());
    }
    // constant radical expression: map invariant-side constants to jet-side
    let inv_ctx = &geo.inv_ctx;
    let jet_ctx = &geo.jet_ctx;
    let mut map = BTreeMap::new();
    for (idx, _) in inv_ctx.radicals.iter().enumerate() {
        let iv = inv_ctx.radical_var(idx);
        for (hv, img) in &frame.nu.const_radicals {
            if img == &Rat::var(iv) {
                map.insert(iv, Rat::var(*hv));
            }
        }
    }
    translate_inv_to_jet(&geo.varpi_scale, inv_ctx, jet_ctx, &map)
}

/// One application of the iota(dx)-dual derivation to an on-section function.
fn dprime_on_section(f: &Rat, geo: &Geometry, frame: &FrameData) -> Result<Rat> {
    let jet_ctx = &geo.jet_ctx;
    let mut d = crate::jet::total_derivative(f, jet_ctx, crate::engine::DEFAULT_MAX_ORDER)?;
    for (k, g) in frame.g.iter().enumerate() {
        if g.is_zero() {
            continue;
        }
        let gk = realize_on_section(g, geo, frame)?;
        let xf = frame.prolonged[k].apply(f, jet_ctx)?;
        d = d.add(&gk.mul(&xf, jet_ctx)?, jet_ctx)?;
    }
    restrict_to_section(&d, geo)
}

/// `D_x` acting on a contact form (coefficients and basis shift), before
/// restriction.
fn lie_dx_contact(f: &Form, geo: &Geometry, opts: &Options) -> Result<Form> {
    let ctx = &geo.jet_ctx;
    let mut out = Form::zero(1);
    for (w, c) in &f.terms {
        let (dep, ord) = match w.as_slice() {
            [CoBasis::Theta { dep, ord }] => (*dep, *ord),
            _ => return Err(Error::Config("on-section chain is not contact".into())),
        };
        let dc = crate::jet::total_derivative(c, ctx, opts.max_jet_order)?;
        out = out.add(
            &Form::one_form(CoBasis::Theta { dep, ord }, dc),
            ctx,
        )?;
        out = out.add(
            &Form::one_form(CoBasis::Theta { dep, ord: ord + 1 }, c.clone()),
            ctx,
        )?;
    }
    Ok(out)
}
