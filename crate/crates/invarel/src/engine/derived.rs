//! Geometries derived from a base geometry by changing the generating
//! invariants, the derivation and the order-0 coframe: the operators are
//! transported from the base run and re-collected over the new field.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::ctx::{Ctx, Var, VarKind};
use crate::expr::parse::parse;
use crate::expr::rat::Rat;
use crate::geometry::Geometry;
use crate::invariant::nabla;
use crate::jet::total_derivative;
use crate::ops::{DiffOp, DiffOpMatrix, InvField};

use super::ab::ABData;
use super::frame::solve_maurer_cartan;
use super::result::{assemble, ELResult};
use super::Options;

/// Rows of d_V for old-field symbols, extended on demand through
/// `d_V(D f) = D(d_V f) - D(f) * B`.
struct RowCache {
    rows: BTreeMap<Var, Vec<DiffOp<InvField>>>,
    b_raw: Vec<DiffOp<InvField>>,
    field: InvField,
}

impl RowCache {
    fn get(
        &mut self,
        v: Var,
        base: &Geometry,
        opts: &Options,
    ) -> Result<Vec<DiffOp<InvField>>> {
        if let Some(r) = self.rows.get(&v) {
            return Ok(r.clone());
        }
        let ctx = &base.inv_ctx;
        let (fam, der) = match ctx.kind(v) {
            VarKind::Fam { fam, der } => (fam as usize, der),
            _ => return Err(Error::Config("row of a non-symbol".into())),
        };
        if der == 0 {
            return Err(Error::Config(format!(
                "missing base row for {}",
                ctx.var_name(v)
            )));
        }
        let prev = self.get(ctx.fam(fam, der - 1), base, opts)?;
        let prev_sym = Rat::var(ctx.fam(fam, der - 1));
        let d_prev = nabla(&prev_sym, ctx)?; // = the shifted symbol
        let mut row = Vec::with_capacity(prev.len());
        for (l, p) in prev.iter().enumerate() {
            // nabla ∘ p - D(f) * B_l
            let der_op = DiffOp::derivation(self.field.clone(), 1).compose(p)?;
            let corr = self.b_raw[l].scale(&d_prev)?;
            row.push(der_op.sub(&corr)?);
        }
        self.rows.insert(v, row.clone());
        Ok(row)
    }

    /// d_V row of an arbitrary old-field expression by the chain rule.
    fn row_of_expr(
        &mut self,
        e: &Rat,
        base: &Geometry,
        opts: &Options,
    ) -> Result<Vec<DiffOp<InvField>>> {
        let ctx = &base.inv_ctx;
        let n = base.n_contact();
        let mut out = vec![DiffOp::zero(self.field.clone()); n];
        for v in e.support(ctx) {
            if !matches!(ctx.kind(v), VarKind::Fam { .. }) {
                continue;
            }
            let pd = e.partial(v, ctx)?;
            if pd.is_zero() {
                continue;
            }
            let row = self.get(v, base, opts)?;
            for l in 0..n {
                out[l] = out[l].add(&row[l].scale(&pd)?)?;
            }
        }
        Ok(out)
    }
}

/// The symbol map from the base invariant field into the derived one.
pub struct FieldMap {
    pub map: BTreeMap<Var, Rat>,
    /// `(rho^{-1} nabla_new)^m` as operators over the new field.
    pub rho_new: Rat,
    old_ctx: Arc<Ctx>,
    new_ctx: Arc<Ctx>,
}

impl FieldMap {
    pub fn apply(&self, e: &Rat) -> Result<Rat> {
        let conv = |p: &crate::expr::poly::Poly| -> Result<Rat> {
            let mut acc = Rat::zero();
            for (m, c) in &p.terms {
                let mut t = Rat::from_q(c.clone());
                for &(v, ex) in &m.0 {
                    let img = self.map.get(&v).ok_or_else(|| {
                        Error::DictionaryIncomplete(format!(
                            "old symbol `{}` has no image",
                            self.old_ctx.var_name(v)
                        ))
                    })?;
                    t = t.mul(&img.pow(ex as i64, &self.new_ctx)?, &self.new_ctx)?;
                }
                acc = acc.add(&t, &self.new_ctx)?;
            }
            Ok(acc)
        };
        conv(&e.num)?.div(&conv(&e.den)?, &self.new_ctx)
    }

    /// Extend the map to cover every symbol appearing in `e` through the
    /// derivative recurrence `phi(I_{m+1}) = rho^{-1} nabla phi(I_m)`.
    pub fn extend_for(&mut self, e: &Rat, old: &Geometry) -> Result<()> {
        let ctx = &old.inv_ctx;
        for v in e.support(ctx) {
            if let VarKind::Fam { fam, der } = ctx.kind(v) {
                for d in 0..=der {
                    let vv = ctx.fam(fam as usize, d);
                    if self.map.contains_key(&vv) {
                        continue;
                    }
                    if d == 0 {
                        return Err(Error::DictionaryIncomplete(format!(
                            "no image for base symbol `{}`",
                            ctx.var_name(vv)
                        )));
                    }
                    let prev = self.map.get(&ctx.fam(fam as usize, d - 1)).unwrap().clone();
                    let img = nabla(&prev, &self.new_ctx)?
                        .div(&self.rho_new, &self.new_ctx)?;
                    self.map.insert(vv, img);
                }
            }
        }
        Ok(())
    }
}

/// Build the old-to-new symbol map from the derived declaration.
pub fn field_map(geo: &Geometry, base: &Geometry) -> Result<FieldMap> {
    let spec = geo.derived.as_ref().unwrap();
    let old_ctx = Arc::clone(&base.inv_ctx);
    let new_ctx = Arc::clone(&geo.inv_ctx);
    let rho_new = parse(&new_ctx, &spec.nabla_factor_new)?;
    let mut fm = FieldMap {
        map: BTreeMap::new(),
        rho_new,
        old_ctx: Arc::clone(&old_ctx),
        new_ctx: Arc::clone(&new_ctx),
    };
    // constant radicals pair up across the fields
    for (odx, or) in old_ctx.radicals.iter().enumerate() {
        if let Some(ob) = or.base.as_q() {
            for (ndx, nr) in new_ctx.radicals.iter().enumerate() {
                if nr.degree == or.degree && nr.base.as_q() == Some(ob.clone()) {
                    fm.map
                        .insert(old_ctx.radical_var(odx), Rat::var(new_ctx.radical_var(ndx)));
                }
            }
        }
    }
    // seed equations: new radical = phi(old_expr), new family = phi(families_old)
    let mut equations: Vec<(Rat, Rat)> = Vec::new(); // (old expr, new value)
    for (idx, oe) in spec.radical_old_exprs.iter().enumerate() {
        if let Some(s) = oe {
            let old_e = parse(&old_ctx, s)?;
            equations.push((old_e, Rat::var(new_ctx.radical_var(idx))));
        }
    }
    for (i, s) in spec.families_old.iter().enumerate() {
        let old_e = parse(&old_ctx, s)?;
        equations.push((old_e, Rat::var(new_ctx.fam(i, 0))));
    }
    for (old_e, new_v) in equations {
        // find the single unmapped symbol, entering linearly
        let unknown: Vec<Var> = old_e
            .support(&old_ctx)
            .into_iter()
            .filter(|v| matches!(old_ctx.kind(*v), VarKind::Fam { .. }) && !fm.map.contains_key(v))
            .collect();
        match unknown.len() {
            0 => {
                // consistency check
                let img = fm.apply(&old_e)?;
                if img != new_v {
                    return Err(Error::Config(format!(
                        "derived map inconsistency: phi({}) != {}",
                        old_e.to_text(&old_ctx),
                        new_v.to_text(&new_ctx)
                    )));
                }
            }
            1 => {
                let u = unknown[0];
                if old_e.den.contains_var(u) || old_e.num.degree_in(u) > 1 {
                    return Err(Error::Config(
                        "derived seed is not linear in its unknown".into(),
                    ));
                }
                let cs = old_e.num.coeffs_in(u);
                let a = fm.apply(&Rat::from_poly(cs[1].clone()))?;
                let b = fm.apply(&Rat::from_poly(cs[0].clone()))?;
                let c = fm.apply(&Rat::from_poly(old_e.den.clone()))?;
                let val = new_v
                    .mul(&c, &new_ctx)?
                    .sub(&b, &new_ctx)?
                    .div(&a, &new_ctx)?;
                fm.map.insert(u, val);
            }
            _ => {
                return Err(Error::Config(format!(
                    "derived seed leaves {} unknowns",
                    unknown.len()
                )))
            }
        }
    }
    Ok(fm)
}

/// Transport an operator in the base derivation into the new field:
/// `sum p_m D_old^m` with `D_old = rho^{-1} nabla_new`.
fn transport_op(
    op: &DiffOp<InvField>,
    fm: &mut FieldMap,
    base: &Geometry,
    field: &InvField,
) -> Result<DiffOp<InvField>> {
    let new_ctx = std::sync::Arc::clone(&field.ctx);
    let mut acc = DiffOp::zero(field.clone());
    // powers of rho^{-1} nabla
    let rho_inv = fm.rho_new.inverse(&new_ctx)?;
    let step = DiffOp::from_coeffs(field.clone(), vec![Rat::zero(), rho_inv]);
    let mut power = DiffOp::mult(field.clone(), Rat::one());
    for (m, p) in op.coeffs.iter().enumerate() {
        if m > 0 {
            power = step.compose(&power)?;
        }
        if p.is_zero() {
            continue;
        }
        fm.extend_for(p, base)?;
        let pc = fm.apply(p)?;
        acc = acc.add(&power.scale(&pc)?)?;
    }
    Ok(acc)
}

fn assert_rational(geo: &Geometry, op: &DiffOp<InvField>) -> Result<()> {
    for c in &op.coeffs {
        if c.vars().iter().any(|v| geo.inv_ctx.is_radical(*v)) {
            return Err(Error::IrrationalResidue(format!(
                "operator coefficient {} keeps a radical",
                c.to_text(&geo.inv_ctx)
            )));
        }
    }
    Ok(())
}

pub fn run(geo: &Geometry, l: &Rat, opts: &Options) -> Result<ELResult> {
    let spec = geo.derived.as_ref().unwrap();
    let base = crate::geometry::find(&spec.base)?;
    let new_ctx = &geo.inv_ctx;
    let field = InvField {
        ctx: Arc::clone(&geo.inv_ctx),
    };

    // base run on the raw iota basis
    let mut frame = solve_maurer_cartan(&base, opts)?;
    let mut need = 1u32;
    let n_old_fam = base.invariants.len();
    let mut dvs = Vec::new();
    for fam in 0..n_old_fam {
        let dv = super::ab::dv_invariant(&base, &mut frame, fam, opts)?;
        need = need.max(dv.max_order());
        dvs.push(dv);
    }
    let phi = super::ab::dv_varpi(&base, &mut frame, opts)?;
    need = need.max(phi.max_order());
    let table = if opts.on_section {
        super::rewrite::contact_rewrite_on_section(&base, &mut frame, need, opts)?
    } else {
        super::rewrite::contact_rewrite(&base, &mut frame, need, opts)?
    };
    let base_field = InvField {
        ctx: Arc::clone(&base.inv_ctx),
    };
    let n_dir = base.n_contact();
    let mut cache = RowCache {
        rows: BTreeMap::new(),
        b_raw: table.collect(&phi, &base)?,
        field: base_field.clone(),
    };
    for (fam, dv) in dvs.iter().enumerate() {
        let row = table.collect(dv, &base)?;
        cache
            .rows
            .insert(base.inv_ctx.fam(fam, 0), row);
    }

    let mut fm = field_map(geo, &base)?;
    // consistency: phi(nabla_factor_old) == rho_new
    let rho_old = parse(&base.inv_ctx, &spec.nabla_factor_old)?;
    fm.extend_for(&rho_old, &base)?;
    let rho_img = fm.apply(&rho_old)?;
    if rho_img != fm.rho_new {
        return Err(Error::Config(format!(
            "nabla factor mismatch: phi({}) = {} but declared {}",
            rho_old.to_text(&base.inv_ctx),
            rho_img.to_text(new_ctx),
            fm.rho_new.to_text(new_ctx)
        )));
    }

    // coframe scales
    let scales: Vec<Rat> = spec
        .coframe_scale
        .iter()
        .map(|s| parse(new_ctx, s))
        .collect::<Result<_>>()?;
    if scales.len() != n_dir {
        return Err(Error::ShapeMismatch(format!(
            "{} coframe scales for {} directions",
            scales.len(),
            n_dir
        )));
    }

    // A rows for the new families
    let n_new_fam = geo.invariants.len();
    let mut a_entries = Vec::with_capacity(n_new_fam * n_dir);
    for i in 0..n_new_fam {
        let psi = parse(&base.inv_ctx, &spec.families_old[i])?;
        let row_old = cache.row_of_expr(&psi, &base, opts)?;
        for (ldir, op) in row_old.iter().enumerate() {
            let moved = transport_op(op, &mut fm, &base, &field)?;
            let sinv = scales[ldir].inverse(new_ctx)?;
            let composed = moved.compose(&DiffOp::mult(field.clone(), sinv))?;
            assert_rational(geo, &composed)?;
            a_entries.push(composed);
        }
    }
    let a = DiffOpMatrix::new(n_new_fam, n_dir, a_entries)?;

    // B rows: B_old - (1/rho_old) d_V(rho_old)
    let rho_row = cache.row_of_expr(&rho_old, &base, opts)?;
    let rho_inv_old = rho_old.inverse(&base.inv_ctx)?;
    let mut b = Vec::with_capacity(n_dir);
    for ldir in 0..n_dir {
        let corr = rho_row[ldir].scale(&rho_inv_old)?;
        let total = cache.b_raw[ldir].sub(&corr)?;
        let moved = transport_op(&total, &mut fm, &base, &field)?;
        let sinv = scales[ldir].inverse(new_ctx)?;
        let composed = moved.compose(&DiffOp::mult(field.clone(), sinv))?;
        assert_rational(geo, &composed)?;
        b.push(composed);
    }

    let a_star = a.adjoint()?;
    for r in 0..a_star.rows {
        for c in 0..a_star.cols {
            assert_rational(geo, a_star.at(r, c))?;
        }
    }
    let b_star = b.iter().map(|o| o.adjoint()).collect::<Result<Vec<_>>>()?;

    // W: scale and varpi factor realized over the base
    let w = compute_w_derived(geo, &base, &mut fm, &scales, &mut frame, opts).ok();

    assemble(
        geo,
        l,
        ABData { a, b, a_star, b_star },
        w,
        "derived coframe",
    )
}

/// Realize a new-field expression as a jet expression through the base.
pub fn realize_new_expr(
    geo: &Geometry,
    base: &Geometry,
    e: &Rat,
    opts: &Options,
) -> Result<Rat> {
    let spec = geo.derived.as_ref().unwrap();
    let new_ctx = &geo.inv_ctx;
    let jet_ctx = &base.jet_ctx;
    let mut map: BTreeMap<Var, Rat> = BTreeMap::new();
    // gamma_new = realize(rho_old) * gamma_old
    let rho_old = parse(&base.inv_ctx, &spec.nabla_factor_old)?;
    let rho_jets = super::w::realize_expr(base, &rho_old, opts)?;
    let gamma_old = base
        .gamma
        .clone()
        .ok_or_else(|| Error::Config("base lacks a derivation".into()))?;
    let gamma_new = rho_jets.mul(&gamma_old, jet_ctx)?;
    for v in e.support(new_ctx) {
        match new_ctx.kind(v) {
            VarKind::Fam { fam, der } => {
                let fam = fam as usize;
                if fam >= geo.invariants.len() {
                    return Err(Error::DictionaryIncomplete("helper in realization".into()));
                }
                let psi = parse(&base.inv_ctx, &spec.families_old[fam])?;
                let mut cur = super::w::realize_expr(base, &psi, opts)?;
                for _ in 0..der {
                    cur = gamma_new.mul(
                        &total_derivative(&cur, jet_ctx, opts.max_jet_order)?,
                        jet_ctx,
                    )?;
                }
                map.insert(v, cur);
            }
            _ => {}
        }
    }
    for (idx, oe) in spec.radical_old_exprs.iter().enumerate() {
        let rv = new_ctx.radical_var(idx);
        if !e.contains_var(rv) {
            continue;
        }
        let s = oe.as_ref().ok_or_else(|| {
            Error::DictionaryIncomplete("derived radical lacks old_expr".into())
        })?;
        let old_e = parse(&base.inv_ctx, s)?;
        map.insert(rv, super::w::realize_expr(base, &old_e, opts)?);
    }
    let conv = |p: &crate::expr::poly::Poly| -> Result<Rat> {
        let mut acc = Rat::zero();
        for (m, c) in &p.terms {
            let mut t = Rat::from_q(c.clone());
            for &(v, ex) in &m.0 {
                let img = map.get(&v).ok_or_else(|| {
                    Error::DictionaryIncomplete(format!(
                        "no realization for {}",
                        new_ctx.var_name(v)
                    ))
                })?;
                t = t.mul(&img.pow(ex as i64, jet_ctx)?, jet_ctx)?;
            }
            acc = acc.add(&t, jet_ctx)?;
        }
        Ok(acc)
    };
    conv(&e.num)?.div(&conv(&e.den)?, jet_ctx)
}

fn compute_w_derived(
    geo: &Geometry,
    base: &Geometry,
    fm: &mut FieldMap,
    scales: &[Rat],
    frame: &mut super::frame::FrameData,
    opts: &Options,
) -> Result<Vec<Vec<Rat>>> {
    let spec = geo.derived.as_ref().unwrap();
    let jet_ctx = &base.jet_ctx;
    let n = base.n_contact();
    let iotas = super::w::iota_theta_explicit(base, Some(frame), opts)?;
    // h_new = R * h_old with R = 1/rho_old
    let rho_old = parse(&base.inv_ctx, &spec.nabla_factor_old)?;
    let rho_jets = super::w::realize_expr(base, &rho_old, opts)?;
    let gamma_old = base
        .gamma
        .clone()
        .ok_or_else(|| Error::Config("base lacks a derivation".into()))?;
    let h_new = gamma_old.mul(&rho_jets, jet_ctx)?.inverse(jet_ctx)?;
    let _ = fm;
    let mut w = Vec::with_capacity(n);
    for j in 0..n {
        let s_jets = realize_new_expr(geo, base, &scales[j], opts)?;
        let mut row = Vec::with_capacity(n);
        for d in 0..n {
            let a = iotas[j].coeff(&[crate::jet::form::CoBasis::Theta { dep: d, ord: 0 }]);
            row.push(a.mul(&s_jets, jet_ctx)?.mul(&h_new, jet_ctx)?);
        }
        w.push(row);
    }
    Ok(w)
}
