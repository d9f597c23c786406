//! The direct route for geometries with explicit invariants and an explicit
//! (or constructed) coframe: expand the vertical differentials in the chain
//! `nabla^m(vartheta_0)` and rewrite the jet coefficients through the
//! cross-section dictionary.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::ctx::{Var, VarKind};
use crate::expr::rat::Rat;
use crate::geometry::{build_global_coframe, restrict_to_section, CoframeSpec, Geometry};
use crate::jet::form::{CoBasis, Form};
use crate::jet::vf::VectorField;
use crate::jet::{jet_support, total_derivative};
use crate::ops::{DiffOp, DiffOpMatrix, InvField};

use super::ab::ABData;
use super::frame::NuTable;
use super::result::{assemble, ELResult};
use super::Options;

/// Lie derivative of a contact form along `gamma D_x`.
fn nabla_form(f: &Form, gamma: &Rat, geo: &Geometry, opts: &Options) -> Result<Form> {
    let ctx = &geo.jet_ctx;
    let mut out = Form::zero(1);
    for (w, c) in &f.terms {
        let (dep, ord) = match w.as_slice() {
            [CoBasis::Theta { dep, ord }] => (*dep, *ord),
            _ => {
                return Err(Error::Config(
                    "nabla chain applies to contact forms only".into(),
                ))
            }
        };
        let dc = gamma.mul(&total_derivative(c, ctx, opts.max_jet_order)?, ctx)?;
        out = out.add(&Form::one_form(CoBasis::Theta { dep, ord }, dc), ctx)?;
        out = out.add(
            &Form::one_form(
                CoBasis::Theta { dep, ord: ord + 1 },
                gamma.mul(c, ctx)?,
            ),
            ctx,
        )?;
    }
    Ok(out)
}

/// Cross-section dictionary for explicit geometries: seeds plus inversion of
/// the restricted invariant realizations, order by order.
pub fn explicit_dictionary(geo: &Geometry, target: u32, opts: &Options) -> Result<NuTable> {
    let jet_ctx = &geo.jet_ctx;
    let inv_ctx = &geo.inv_ctx;
    if geo.n_contact() != 1 {
        return Err(Error::Config(
            "the explicit dictionary is implemented for one dependent variable".into(),
        ));
    }
    let mut nu = NuTable {
        map: BTreeMap::new(),
        const_radicals: BTreeMap::new(),
    };
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
    for (v, val) in &geo.section_seeds {
        nu.map.insert(*v, val.clone());
    }
    // realizations of I_j, restricted and inverted for the next coordinate
    let mut cur = geo.invariants[0]
        .expr
        .clone()
        .ok_or_else(|| Error::Config("explicit route needs an explicit invariant".into()))?;
    let gamma = geo
        .gamma
        .clone()
        .ok_or_else(|| Error::Config("explicit route needs a derivation".into()))?;
    let mut der = 0u32;
    loop {
        let restricted = restrict_to_section(&cur, geo)?;
        let unknown: Vec<Var> = restricted
            .support(jet_ctx)
            .into_iter()
            .filter(|v| !nu.map.contains_key(v))
            .collect();
        if unknown.len() > 1 {
            return Err(Error::DictionaryIncomplete(format!(
                "invariant of order {der} leaves {} unknown coordinates",
                unknown.len()
            )));
        }
        if let Some(&top) = unknown.first() {
            if restricted.den.contains_var(top) || restricted.num.degree_in(top) != 1 {
                return Err(Error::DictionaryIncomplete(format!(
                    "restriction at order {der} is not linear in {}",
                    jet_ctx.var_name(top)
                )));
            }
            let coeffs = restricted.num.coeffs_in(top);
            let a = nu.translate(&Rat::from_poly(coeffs[1].clone()), jet_ctx, inv_ctx)?;
            let b = nu.translate(&Rat::from_poly(coeffs[0].clone()), jet_ctx, inv_ctx)?;
            let c = nu.translate(&Rat::from_poly(restricted.den.clone()), jet_ctx, inv_ctx)?;
            let sym = Rat::var(inv_ctx.fam(0, der));
            let val = sym.mul(&c, inv_ctx)?.sub(&b, inv_ctx)?.div(&a, inv_ctx)?;
            nu.map.insert(top, val);
        }
        // done when the dictionary covers the target order
        let covered = (0..=target).all(|o| nu.map.contains_key(&jet_ctx.dep(0, o)));
        if covered {
            break;
        }
        if der > target + 4 {
            return Err(Error::DictionaryIncomplete(format!(
                "dictionary stalled before order {target}"
            )));
        }
        cur = gamma.mul(&total_derivative(&cur, jet_ctx, opts.max_jet_order)?, ctx_of(geo))?;
        der += 1;
    }
    Ok(nu)
}

fn ctx_of(geo: &Geometry) -> &crate::expr::ctx::Ctx {
    &geo.jet_ctx
}

/// Match a contact form against the chain `nabla^m(thetas)`, returning
/// invariant operator rows.
fn collect_in_chain(
    form: &Form,
    chains: &[Vec<Form>],
    nu: &NuTable,
    geo: &Geometry,
) -> Result<Vec<DiffOp<InvField>>> {
    let jet_ctx = &geo.jet_ctx;
    let inv_ctx = &geo.inv_ctx;
    let field = InvField {
        ctx: std::sync::Arc::clone(&geo.inv_ctx),
    };
    let n = chains.len();
    let max_ord = form.max_order();
    let mut residual = form.clone();
    let mut coeffs: Vec<Vec<Rat>> = vec![vec![Rat::zero(); max_ord as usize + 1]; n];
    for m in (0..=max_ord).rev() {
        let mut mat = vec![vec![Rat::zero(); n]; n];
        let mut rhs = vec![vec![Rat::zero(); 1]; n];
        for d in 0..n {
            for l in 0..n {
                mat[d][l] = chains[l][m as usize].coeff(&[CoBasis::Theta { dep: d, ord: m }]);
            }
            rhs[d][0] = residual.coeff(&[CoBasis::Theta { dep: d, ord: m }]);
        }
        let sol = crate::expr::solve::solve_linear(&mat, &rhs, jet_ctx)?;
        for l in 0..n {
            let c = sol[l][0].clone();
            if c.is_zero() {
                continue;
            }
            residual = residual.sub(&chains[l][m as usize].scale(&c, jet_ctx)?, jet_ctx)?;
            coeffs[l][m as usize] = c;
        }
    }
    if !residual.is_zero() {
        return Err(Error::RemainderNonzero(
            "vertical differential lies outside the coframe span".into(),
        ));
    }
    let mut out = Vec::with_capacity(n);
    for cl in coeffs {
        let inv: Vec<Rat> = cl
            .into_iter()
            .map(|c| {
                if c.is_zero() {
                    Ok(Rat::zero())
                } else {
                    let r = restrict_to_section(&c, geo)?;
                    nu.translate(&r, jet_ctx, inv_ctx)
                }
            })
            .collect::<Result<_>>()?;
        out.push(DiffOp::from_coeffs(field.clone(), inv));
    }
    Ok(out)
}

pub fn run(geo: &Geometry, l: &Rat, opts: &Options) -> Result<ELResult> {
    let jet_ctx = &geo.jet_ctx;
    let gamma = geo
        .gamma
        .clone()
        .ok_or_else(|| Error::Config("explicit route needs a derivation".into()))?;
    let (varpi, thetas) = match &geo.coframe {
        CoframeSpec::Explicit { varpi, thetas } => (varpi.clone(), thetas.clone()),
        CoframeSpec::Construct => {
            let (v, t, _) = build_global_coframe(geo, opts.max_jet_order)?;
            (v, t)
        }
        CoframeSpec::Invariantize => {
            return Err(Error::Config("invariantized coframe uses the frame route".into()))
        }
    };
    let n = geo.n_contact();

    // vertical differentials of the invariant realizations
    let n_fam = geo.invariants.len();
    let mut dv_forms = Vec::with_capacity(n_fam);
    let mut max_need = 1u32;
    for fam in 0..n_fam {
        let i = super::w::realize_symbol(geo, fam, 0, opts)?;
        let di = gamma.mul(&total_derivative(&i, jet_ctx, opts.max_jet_order)?, jet_ctx)?;
        // d_V I = dI - D(I) varpi, which is purely contact
        let mut f = Form::zero(1);
        for v in jet_support(&i, jet_ctx) {
            if let VarKind::Dep { dep, ord } = jet_ctx.kind(v) {
                let c = i.partial(v, jet_ctx)?;
                if !c.is_zero() {
                    f = f.add(
                        &Form::one_form(CoBasis::Theta { dep: dep as usize, ord }, c),
                        jet_ctx,
                    )?;
                }
            }
        }
        for (w, c) in &varpi.terms {
            if let [CoBasis::Theta { dep, ord }] = w.as_slice() {
                let t = di.mul(c, jet_ctx)?.neg();
                f = f.add(&Form::one_form(CoBasis::Theta { dep: *dep, ord: *ord }, t), jet_ctx)?;
            }
        }
        max_need = max_need.max(f.max_order());
        dv_forms.push(f);
    }

    // B source: -i_D d(varpi)
    let d_varpi = varpi.d(jet_ctx, opts.max_jet_order)?;
    let dual = VectorField::total_derivative_field(jet_ctx.n_deps());
    let contracted = d_varpi.contract(&dual, jet_ctx)?;
    let phi = contracted.scale(&gamma, jet_ctx)?.neg();
    // keep only the contact part (the (0,2) component contracts to contact;
    // any dx part would signal a varpi with d_H varpi != 0)
    let mut phi_contact = Form::zero(1);
    for (w, c) in &phi.terms {
        match w.as_slice() {
            [CoBasis::Theta { dep, ord }] => {
                phi_contact = phi_contact.add(
                    &Form::one_form(CoBasis::Theta { dep: *dep, ord: *ord }, c.clone()),
                    jet_ctx,
                )?;
            }
            [CoBasis::Dx] => {
                if !c.is_zero() {
                    return Err(Error::Config(
                        "varpi does not close: d(varpi) has a horizontal square".into(),
                    ));
                }
            }
            _ => {}
        }
    }
    max_need = max_need.max(phi_contact.max_order());

    // chains nabla^m(vartheta_0^l)
    let mut chains: Vec<Vec<Form>> = Vec::with_capacity(n);
    for t in &thetas {
        let mut chain = vec![t.clone()];
        for _ in 0..max_need {
            let next = nabla_form(chain.last().unwrap(), &gamma, geo, opts)?;
            chain.push(next);
        }
        chains.push(chain);
    }

    let dict_target = max_need + geo.invariants.iter().map(|i| i.order).max().unwrap_or(2) + 2;
    let nu = explicit_dictionary(geo, dict_target, opts)?;

    let field = InvField {
        ctx: std::sync::Arc::clone(&geo.inv_ctx),
    };
    let mut a_entries = Vec::with_capacity(n_fam * n);
    for f in &dv_forms {
        let row = collect_in_chain(f, &chains, &nu, geo)?;
        a_entries.extend(row);
    }
    let a = DiffOpMatrix::new(n_fam, n, a_entries)?;
    let b = collect_in_chain(&phi_contact, &chains, &nu, geo)?;
    let a_star = a.adjoint()?;
    let b_star = b.iter().map(|o| o.adjoint()).collect::<Result<Vec<_>>>()?;
    let _ = field;

    let w = Some(super::w::compute_w(geo, None, opts)?);
    assemble(
        geo,
        l,
        ABData { a, b, a_star, b_star },
        w,
        "explicit coframe",
    )
}
