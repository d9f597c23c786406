//! Steps 1-2 of the cross-section algorithm: solve the linear system for the
//! Maurer-Cartan pullback components `gamma^k = g_k iota(dx)` and
//! `epsilon^k`, and maintain the table of normalized invariants
//! `nu(u^i_j) = iota(u^i_j)` as expressions in the declared invariant
//! symbols.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::ctx::{Ctx, Var, VarKind};
use crate::expr::rat::Rat;
use crate::expr::solve::solve_linear;
use crate::geometry::{restrict_to_section, Geometry};
use crate::invariant::nabla;
use crate::jet::vf::VectorField;

use super::Options;

/// An abstract invariant contact form: a combination of the invariantized
/// coordinate contact forms `iota(theta^dep_ord)` with invariant
/// coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct InvContact {
    pub terms: BTreeMap<(usize, u32), Rat>,
}

impl InvContact {
    pub fn zero() -> Self {
        InvContact {
            terms: BTreeMap::new(),
        }
    }

    pub fn basis(dep: usize, ord: u32) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((dep, ord), Rat::one());
        InvContact { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self, ctx: &Ctx) -> Result<Self> {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            let cur = out.terms.remove(k);
            let sum = match cur {
                Some(p) => p.add(c, ctx)?,
                None => c.clone(),
            };
            if !sum.is_zero() {
                out.terms.insert(*k, sum);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rat, ctx: &Ctx) -> Result<Self> {
        if c.is_zero() {
            return Ok(InvContact::zero());
        }
        let mut out = InvContact::zero();
        for (k, v) in &self.terms {
            let s = v.mul(c, ctx)?;
            if !s.is_zero() {
                out.terms.insert(*k, s);
            }
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        InvContact {
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (*k, v.neg()))
                .collect(),
        }
    }

    pub fn map_coeffs<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&Rat) -> Result<Rat>,
    {
        let mut out = InvContact::zero();
        for (k, v) in &self.terms {
            let c = f(v)?;
            if !c.is_zero() {
                out.terms.insert(*k, c);
            }
        }
        Ok(out)
    }

    pub fn max_order(&self) -> u32 {
        self.terms.keys().map(|(_, o)| *o).max().unwrap_or(0)
    }
}

/// The normalized-invariant dictionary `nu` plus the constant-radical
/// pairing between the jet and invariant towers.
#[derive(Clone, Debug)]
pub struct NuTable {
    pub map: BTreeMap<Var, Rat>,
    pub const_radicals: BTreeMap<Var, Rat>,
}

impl NuTable {
    pub fn get(&self, v: Var) -> Option<&Rat> {
        self.map.get(&v)
    }

    /// Translate a jet expression already restricted to the cross-section
    /// into the invariant field.
    pub fn translate(&self, e: &Rat, jet_ctx: &Ctx, inv_ctx: &Ctx) -> Result<Rat> {
        let num = self.translate_poly(&e.num, jet_ctx, inv_ctx)?;
        let den = self.translate_poly(&e.den, jet_ctx, inv_ctx)?;
        if den.is_zero() {
            return Err(Error::DictionaryIncomplete(format!(
                "denominator vanished translating {}",
                e.to_text(jet_ctx)
            )));
        }
        num.div(&den, inv_ctx)
    }

    fn translate_poly(
        &self,
        p: &crate::expr::poly::Poly,
        jet_ctx: &Ctx,
        inv_ctx: &Ctx,
    ) -> Result<Rat> {
        let mut acc = Rat::zero();
        for (m, c) in &p.terms {
            let mut t = Rat::from_q(c.clone());
            for &(v, e) in &m.0 {
                let img = if let Some(i) = self.map.get(&v) {
                    i.clone()
                } else if let Some(i) = self.const_radicals.get(&v) {
                    i.clone()
                } else {
                    return Err(Error::DictionaryIncomplete(format!(
                        "no invariantization for `{}`",
                        jet_ctx.var_name(v)
                    )));
                };
                t = t.mul(&img.pow(e as i64, inv_ctx)?, inv_ctx)?;
            }
            acc = acc.add(&t, inv_ctx)?;
        }
        Ok(acc)
    }
}

/// Maurer-Cartan data and the invariantization machinery for one geometry.
#[derive(Clone, Debug)]
pub struct FrameData {
    /// `gamma^k = g_k * iota(dx)`.
    pub g: Vec<Rat>,
    /// `epsilon^k` in the iota-theta basis.
    pub eps: Vec<InvContact>,
    pub nu: NuTable,
    /// Prolonged generators, shared by later stages.
    pub prolonged: Vec<VectorField>,
    pub prolong_order: u32,
}

fn helper_family(geo: &Geometry, dep: usize) -> usize {
    geo.invariants.len() + dep
}

fn is_helper(geo: &Geometry, ctx: &Ctx, e: &Rat) -> bool {
    e.vars().iter().any(|v| match ctx.kind(*v) {
        VarKind::Fam { fam, .. } => (fam as usize) >= geo.invariants.len(),
        _ => false,
    })
}

/// `nu` of the restriction of a jet expression.
fn nu_of(nu: &NuTable, e: &Rat, geo: &Geometry) -> Result<Rat> {
    let r = restrict_to_section(e, geo)?;
    nu.translate(&r, &geo.jet_ctx, &geo.inv_ctx)
}

/// Apply the `iota(dx)`-dual derivation: `s * nabla` where `varpi = s iota(dx)`.
fn dprime(e: &Rat, geo: &Geometry) -> Result<Rat> {
    let d = nabla(e, &geo.inv_ctx)?;
    geo.varpi_scale.mul(&d, &geo.inv_ctx)
}

/// The successor of a jet coordinate under `D_x`.
fn successor(geo: &Geometry, v: Var) -> Result<Var> {
    match geo.jet_ctx.kind(v) {
        VarKind::Dep { dep, ord } => Ok(geo.jet_ctx.dep(dep as usize, ord + 1)),
        VarKind::X => Err(Error::Config("successor of x".into())),
        _ => Err(Error::Config("successor of a radical".into())),
    }
}

/// Solve for gamma, epsilon and seed the nu-table. The phantom condition
/// (d_H and d_V of every cross-section-fixed coordinate vanish) is the
/// defining system.
pub fn solve_maurer_cartan(geo: &Geometry, opts: &Options) -> Result<FrameData> {
    let jet_ctx = &geo.jet_ctx;
    let inv_ctx = &geo.inv_ctx;
    let l = geo.generators.len();
    if geo.cross_section.len() != l {
        return Err(Error::Config(format!(
            "cross-section fixes {} coordinates for a {}-dimensional algebra",
            geo.cross_section.len(),
            l
        )));
    }

    let max_fixed = geo
        .cross_section
        .iter()
        .filter_map(|(v, _)| match jet_ctx.kind(*v) {
            VarKind::Dep { ord, .. } => Some(ord),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let prolong_order = (max_fixed + 2).max(
        geo.invariants
            .iter()
            .map(|i| i.order)
            .max()
            .unwrap_or(0),
    );
    let prolonged: Vec<VectorField> = geo
        .generators
        .iter()
        .map(|g| g.prolong(prolong_order, jet_ctx, opts.max_jet_order))
        .collect::<Result<_>>()?;

    // --- seed nu ----------------------------------------------------------
    let mut nu = NuTable {
        map: BTreeMap::new(),
        const_radicals: BTreeMap::new(),
    };
    // constant radicals pair up by (degree, base value)
    for (jdx, jr) in jet_ctx.radicals.iter().enumerate() {
        if let Some(jb) = jr.base.as_q() {
            for (idx, ir) in inv_ctx.radicals.iter().enumerate() {
                if ir.degree == jr.degree && ir.base.as_q() == Some(jb.clone()) {
                    nu.const_radicals
                        .insert(jet_ctx.radical_var(jdx), Rat::var(inv_ctx.radical_var(idx)));
                }
            }
        }
    }
    for (v, q) in &geo.cross_section {
        nu.map.insert(*v, Rat::from_q(q.clone()));
    }
    // declared invariants: solve each seed for its top coordinate
    for (i, decl) in geo.invariants.iter().enumerate() {
        let Some(f) = &decl.iota_of else { continue };
        let fs = restrict_to_section(f, geo)?;
        let top = fs
            .support(jet_ctx)
            .into_iter()
            .filter(|v| !nu.map.contains_key(v))
            .max_by_key(|v| match jet_ctx.kind(*v) {
                VarKind::Dep { dep, ord } => (ord, dep),
                _ => (0, 0),
            });
        let Some(top) = top else {
            return Err(Error::DictionaryIncomplete(format!(
                "seed for `{}` fixes no new coordinate",
                decl.name
            )));
        };
        // fs = (a * top + b) / c with a, b, c free of top
        if fs.den.contains_var(top) || fs.num.degree_in(top) != 1 {
            return Err(Error::DictionaryIncomplete(format!(
                "seed for `{}` is not linear in {}",
                decl.name,
                jet_ctx.var_name(top)
            )));
        }
        let coeffs = fs.num.coeffs_in(top);
        let a = Rat::from_poly(coeffs[1].clone());
        let b = Rat::from_poly(coeffs[0].clone());
        let c = Rat::from_poly(fs.den.clone());
        let a_i = nu.translate(&a, jet_ctx, inv_ctx)?;
        let b_i = nu.translate(&b, jet_ctx, inv_ctx)?;
        let c_i = nu.translate(&c, jet_ctx, inv_ctx)?;
        // iota(fs) = const * I_i
        let sym = Rat::var(inv_ctx.fam(i, 0)).scale_q(&geo.iota_const[i]);
        let val = sym.mul(&c_i, inv_ctx)?.sub(&b_i, inv_ctx)?.div(&a_i, inv_ctx)?;
        nu.map.insert(top, val);
    }
    for (v, val) in &geo.section_seeds {
        nu.map.insert(*v, val.clone());
    }

    // --- gamma system ------------------------------------------------------
    // l equations (one per fixed coordinate), l unknowns g_k. Unknown
    // invariantizations of free coordinates enter as helper symbols of the
    // field and are resolved afterwards through the recurrence formulas.
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    let mut rhs: Vec<Vec<Rat>> = Vec::new();
    let mut helper_cols: Vec<Var> = Vec::new();

    for (c_var, _) in &geo.cross_section {
        let mut row = vec![Rat::zero(); l];
        for (k, xk) in prolonged.iter().enumerate() {
            let coeff = match jet_ctx.kind(*c_var) {
                VarKind::X => xk.xi.clone(),
                VarKind::Dep { dep, ord } => xk.phi_at(dep as usize, ord),
                _ => unreachable!(),
            };
            if coeff.is_zero() {
                continue;
            }
            let r = restrict_to_section(&coeff, geo)?;
            row[k] = translate_with_helpers(&nu, &r, geo, &mut helper_cols)?;
        }
        // nu of the successor
        let succ_term = match jet_ctx.kind(*c_var) {
            VarKind::X => Rat::one(),
            VarKind::Dep { .. } => {
                let sv = successor(geo, *c_var)?;
                match nu.map.get(&sv) {
                    Some(x) => x.clone(),
                    None => Rat::var(helper_var(geo, sv, &mut helper_cols)),
                }
            }
            _ => unreachable!(),
        };
        rows.push(row);
        rhs.push(vec![succ_term.neg()]);
    }

    let solution = solve_linear(&rows, &rhs, inv_ctx).map_err(|e| {
        Error::SingularSystem(format!(
            "gamma system for {} ({e}); cross-section may not be transversal",
            geo.name
        ))
    })?;
    let mut g: Vec<Rat> = solution.iter().map(|r| r[0].clone()).collect();

    // resolve helpers bottom-up via the recurrence
    // N_h = s nabla nu(pred) - sum_k g_k nu(X_k pred)
    helper_cols.sort_by_key(|v| match jet_ctx.kind(*v) {
        VarKind::Dep { dep, ord } => (ord, dep),
        _ => (0, 0),
    });
    for hv in helper_cols.clone() {
        let hsym = helper_sym(geo, hv);
        let (dep, ord) = match jet_ctx.kind(hv) {
            VarKind::Dep { dep, ord } => (dep as usize, ord),
            _ => unreachable!(),
        };
        if ord == 0 {
            return Err(Error::DictionaryIncomplete(format!(
                "no dictionary path to `{}`",
                jet_ctx.var_name(hv)
            )));
        }
        let pred = jet_ctx.dep(dep, ord - 1);
        let Some(pv) = nu.map.get(&pred).cloned() else {
            return Err(Error::DictionaryIncomplete(format!(
                "no dictionary path to `{}`",
                jet_ctx.var_name(hv)
            )));
        };
        if is_helper(geo, inv_ctx, &pv) {
            return Err(Error::DictionaryIncomplete(format!(
                "nested helper below `{}`",
                jet_ctx.var_name(hv)
            )));
        }
        let mut recur = dprime(&pv, geo)?;
        for (k, xk) in prolonged.iter().enumerate() {
            if g[k].is_zero() {
                continue;
            }
            let coeff = xk.phi_at(dep, ord - 1);
            if coeff.is_zero() {
                continue;
            }
            let r = restrict_to_section(&coeff, geo)?;
            let t = nu.translate(&r, jet_ctx, inv_ctx)?;
            recur = recur.sub(&g[k].mul(&t, inv_ctx)?, inv_ctx)?;
        }
        // solve N_h = recur(N_h) as a rational equation, linear in N_h
        let eq = Rat::var(hsym).sub(&recur, inv_ctx)?;
        let deg = eq.num.degree_in(hsym);
        let root = if deg == 0 {
            return Err(Error::SingularSystem(format!(
                "helper `{}` dropped out of its own recurrence",
                jet_ctx.var_name(hv)
            )));
        } else if deg == 1 {
            let cs = eq.num.coeffs_in(hsym);
            Rat::from_poly(cs[0].clone())
                .neg()
                .div(&Rat::from_poly(cs[1].clone()), inv_ctx)?
        } else {
            return Err(Error::SingularSystem(format!(
                "helper `{}` enters its recurrence nonlinearly",
                jet_ctx.var_name(hv)
            )));
        };
        if is_helper(geo, inv_ctx, &root) {
            return Err(Error::SingularSystem("helper resolution is cyclic".into()));
        }
        let mut sub = BTreeMap::new();
        sub.insert(hsym, root.clone());
        for gk in g.iter_mut() {
            *gk = gk.substitute(&sub, inv_ctx)?;
        }
        nu.map.insert(hv, root);
    }
    for gk in &g {
        if is_helper(geo, inv_ctx, gk) {
            return Err(Error::SingularSystem(
                "gamma components retain unresolved helpers".into(),
            ));
        }
    }

    // --- epsilon system ----------------------------------------------------
    // unknowns: eps^k; equations: one per fixed coordinate
    let mut mat: Vec<Vec<Rat>> = Vec::new();
    let mut rhs_forms: Vec<InvContact> = Vec::new();
    for (c_var, _) in &geo.cross_section {
        let mut row = vec![Rat::zero(); l];
        for (k, xk) in prolonged.iter().enumerate() {
            let coeff = match jet_ctx.kind(*c_var) {
                VarKind::X => xk.xi.clone(),
                VarKind::Dep { dep, ord } => xk.phi_at(dep as usize, ord),
                _ => unreachable!(),
            };
            if coeff.is_zero() {
                continue;
            }
            row[k] = nu_of(&nu, &coeff, geo)?;
        }
        let rhs_form = match jet_ctx.kind(*c_var) {
            VarKind::X => InvContact::zero(),
            VarKind::Dep { dep, ord } => InvContact::basis(dep as usize, ord).neg(),
            _ => unreachable!(),
        };
        mat.push(row);
        rhs_forms.push(rhs_form);
    }
    // enumerate the basis keys appearing on the right
    let mut keys: Vec<(usize, u32)> = Vec::new();
    for f in &rhs_forms {
        for k in f.terms.keys() {
            if !keys.contains(k) {
                keys.push(*k);
            }
        }
    }
    keys.sort();
    let rhs_cols: Vec<Vec<Rat>> = rhs_forms
        .iter()
        .map(|f| {
            keys.iter()
                .map(|k| f.terms.get(k).cloned().unwrap_or_else(Rat::zero))
                .collect()
        })
        .collect();
    let sol = solve_linear(&mat, &rhs_cols, inv_ctx).map_err(|e| {
        Error::SingularSystem(format!("epsilon system for {} ({e})", geo.name))
    })?;
    let eps: Vec<InvContact> = sol
        .into_iter()
        .map(|row| {
            let mut f = InvContact::zero();
            for (k, c) in keys.iter().zip(row.into_iter()) {
                if !c.is_zero() {
                    f.terms.insert(*k, c);
                }
            }
            f
        })
        .collect();

    Ok(FrameData {
        g,
        eps,
        nu,
        prolonged,
        prolong_order,
    })
}

fn helper_sym(geo: &Geometry, v: Var) -> Var {
    let (dep, ord) = match geo.jet_ctx.kind(v) {
        VarKind::Dep { dep, ord } => (dep as usize, ord),
        _ => unreachable!("helpers are jet coordinates"),
    };
    geo.inv_ctx.fam(helper_family(geo, dep), ord)
}

fn helper_var(geo: &Geometry, v: Var, cols: &mut Vec<Var>) -> Var {
    if !cols.contains(&v) {
        cols.push(v);
    }
    helper_sym(geo, v)
}

/// Translate, introducing helper symbols for unknown free coordinates.
fn translate_with_helpers(
    nu: &NuTable,
    e: &Rat,
    geo: &Geometry,
    cols: &mut Vec<Var>,
) -> Result<Rat> {
    let jet_ctx = &geo.jet_ctx;
    let inv_ctx = &geo.inv_ctx;
    let mut ext = nu.clone();
    for v in e.support(jet_ctx) {
        if ext.map.contains_key(&v) {
            continue;
        }
        if matches!(jet_ctx.kind(v), VarKind::Dep { .. }) {
            let h = helper_var(geo, v, cols);
            ext.map.insert(v, Rat::var(h));
        }
    }
    ext.translate(e, jet_ctx, inv_ctx)
}

/// Extend nu upward: `nu(u^i_{j+1}) = s nabla nu(u^i_j) - sum_k g_k
/// nu(X_k u^i_j)` for every dependent, up to `target` order.
pub fn extend_nu(
    frame: &mut FrameData,
    geo: &Geometry,
    target: u32,
    opts: &Options,
) -> Result<()> {
    let jet_ctx = &geo.jet_ctx;
    // make sure prolongations reach the target order
    if frame.prolong_order < target {
        frame.prolonged = geo
            .generators
            .iter()
            .map(|g| g.prolong(target, jet_ctx, opts.max_jet_order))
            .collect::<Result<_>>()?;
        frame.prolong_order = target;
    }
    for dep in 0..jet_ctx.n_deps() {
        for ord in 0..target {
            let cur = jet_ctx.dep(dep, ord);
            let next = jet_ctx.dep(dep, ord + 1);
            if frame.nu.map.contains_key(&next) {
                continue;
            }
            let Some(cv) = frame.nu.map.get(&cur).cloned() else {
                return Err(Error::DictionaryIncomplete(format!(
                    "nu({}) unknown",
                    jet_ctx.var_name(cur)
                )));
            };
            let mut val = dprime(&cv, geo)?;
            for (k, xk) in frame.prolonged.iter().enumerate() {
                if frame.g[k].is_zero() {
                    continue;
                }
                let coeff = xk.phi_at(dep, ord);
                if coeff.is_zero() {
                    continue;
                }
                let t = nu_of(&frame.nu, &coeff, geo)?;
                val = val.sub(&frame.g[k].mul(&t, &geo.inv_ctx)?, &geo.inv_ctx)?;
            }
            frame.nu.map.insert(next, val);
        }
    }
    Ok(())
}

/// The invariantization of a jet function: restrict and translate, extending
/// nu as needed.
pub fn iota_function(
    frame: &mut FrameData,
    geo: &Geometry,
    f: &Rat,
    opts: &Options,
) -> Result<Rat> {
    let ord = crate::jet::jet_order(f, &geo.jet_ctx);
    extend_nu(frame, geo, ord, opts)?;
    nu_of(&frame.nu, f, geo)
}

/// Check: invariant expressions must not mention helper families.
pub fn assert_no_helpers(geo: &Geometry, e: &Rat) -> Result<()> {
    if is_helper(geo, &geo.inv_ctx, e) {
        return Err(Error::DictionaryIncomplete(
            "result contains unresolved normalized coordinates".into(),
        ));
    }
    Ok(())
}
