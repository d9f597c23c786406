//! Geometry configurations and the built-in catalog, the global-coframe
//! construction from explicit invariants, and cross-section restriction.

pub mod config;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::rat::Rat;
use crate::expr::solve::determinant;
use crate::jet::form::{CoBasis, Form};
use crate::jet::{jet_order, total_derivative};

pub use config::{load, load_str, CoframeSpec, Geometry, InvariantDecl};

/// Built-in geometry configs, loaded through the same format as user files.
pub fn catalog() -> Result<Vec<Geometry>> {
    let sources: &[&str] = &[
        include_str!("../../assets/geometries/se2-local.json"),
        include_str!("../../assets/geometries/se2-global.json"),
        include_str!("../../assets/geometries/se2-tresse.json"),
        include_str!("../../assets/geometries/moebius2d-local.json"),
        include_str!("../../assets/geometries/moebius2d-global.json"),
        include_str!("../../assets/geometries/psl3r-local.json"),
        include_str!("../../assets/geometries/psl3r-global.json"),
        include_str!("../../assets/geometries/se3-local.json"),
        include_str!("../../assets/geometries/se3-global.json"),
        include_str!("../../assets/geometries/se3-minkowski.json"),
        include_str!("../../assets/geometries/conf3.json"),
        include_str!("../../assets/geometries/se4-local.json"),
        include_str!("../../assets/geometries/se4-minkowski.json"),
    ];
    sources.iter().map(|s| load_str(s)).collect()
}

pub fn find(name: &str) -> Result<Geometry> {
    catalog()?
        .into_iter()
        .find(|g| g.name == name)
        .ok_or_else(|| Error::GeometryNotFound(name.to_string()))
}

/// Restrict an expression to the cross-section by substituting the fixed
/// coordinates; radicals reduce to exact roots in the remaining tower.
pub fn restrict_to_section(e: &Rat, geo: &Geometry) -> Result<Rat> {
    let map: BTreeMap<_, _> = geo
        .cross_section
        .iter()
        .map(|(v, q)| (*v, Rat::from_q(q.clone())))
        .collect();
    e.substitute(&map, &geo.jet_ctx).map_err(|err| match err {
        Error::DenominatorVanishes(d) => Error::DenominatorVanishesOnSection(d),
        other => other,
    })
}

/// Restrict a form's coefficients to the cross-section.
pub fn restrict_form_to_section(f: &Form, geo: &Geometry) -> Result<Form> {
    f.map_coeffs(|c| restrict_to_section(c, geo))
}

/// The symbol matrix `A^i_j = vartheta~^i(d/du^j_{k_i})` of the invariants.
#[derive(Debug, Clone)]
pub struct SymbolMatrix {
    pub entries: Vec<Vec<Rat>>,
    pub det: Rat,
}

/// The construction of an invariant coframe from explicit invariants:
/// `varpi = dI0 / D(I0)` unless the geometry declares one, the 1-forms
/// `vartheta~^i = dI^i - D(I^i) varpi`, and the order-0 contact forms
/// `vartheta_0^i = gamma^{-k_i} sum_j vartheta~^i(d/du^j_{k_i}) theta_0^j`.
pub fn build_global_coframe(
    geo: &Geometry,
    max_ord: u32,
) -> Result<(Form, Vec<Form>, SymbolMatrix)> {
    let ctx = &geo.jet_ctx;
    let gamma = geo
        .gamma
        .clone()
        .ok_or_else(|| Error::Config("construct coframe needs an explicit derivation".into()))?;
    let n = geo.n_contact();
    let i0 = geo.invariants[0]
        .expr
        .clone()
        .ok_or_else(|| Error::Config("construct coframe needs explicit invariants".into()))?;
    let d_i0 = gamma.mul(&total_derivative(&i0, ctx, max_ord)?, ctx)?;
    if d_i0.is_zero() {
        return Err(Error::DegenerateSymbolMatrix("D(I0) vanishes".into()));
    }

    // varpi: declared explicit coframe wins, otherwise the Tresse form
    let varpi = match &geo.coframe {
        CoframeSpec::Explicit { varpi, .. } => varpi.clone(),
        _ => {
            // dI0 / D(I0)
            let df = crate::jet::form::d_function(&i0, ctx, max_ord)?;
            df.scale(&d_i0.inverse(ctx)?, ctx)?
        }
    };

    // check varpi(D) = 1
    let dual = crate::jet::vf::VectorField::total_derivative_field(ctx.n_deps());
    let pairing = varpi
        .contract(&dual, ctx)?
        .coeff(&[])
        .mul(&gamma, ctx)?;
    if !pairing.is_one() {
        return Err(Error::Config(format!(
            "varpi(D) = {} instead of 1",
            pairing.to_text(ctx)
        )));
    }

    // the coframe generators: declared explicit invariants, skipping I0 when
    // varpi is the Tresse form (its theta~ vanishes identically), extending
    // by D-derivatives when fewer than n remain
    let gens: Vec<Rat> = geo
        .invariants
        .iter()
        .filter_map(|d| d.expr.clone())
        .collect();
    if gens.is_empty() {
        return Err(Error::Config("no explicit invariants".into()));
    }
    let mut pool: Vec<Rat> = gens.clone();
    if !matches!(geo.coframe, CoframeSpec::Explicit { .. }) {
        pool.remove(0);
    }
    while pool.len() < n {
        let last = pool.last().unwrap_or_else(|| gens.last().unwrap()).clone();
        let next = gamma.mul(&total_derivative(&last, ctx, max_ord)?, ctx)?;
        pool.push(next);
    }
    pool.truncate(n);

    let mut thetas = Vec::with_capacity(n);
    let mut entries = Vec::with_capacity(n);
    for inv in &pool {
        let k = jet_order(inv, ctx);
        let d_inv = gamma.mul(&total_derivative(inv, ctx, max_ord)?, ctx)?;
        // theta~ = d I - D(I) varpi, evaluated on d/du^j_k
        let mut row = Vec::with_capacity(n);
        let mut form = Form::zero(1);
        let gk = gamma.pow(k as i64, ctx)?.inverse(ctx)?;
        for j in 0..n {
            let v = ctx.dep(j, k);
            let mut a = inv.partial(v, ctx)?;
            // varpi component on du^j_k: varpi is stored in the contact
            // basis, where du^j_k appears in theta^j_k and (via u^j_{k+1})
            // nowhere else of that order
            let w = varpi.coeff(&[CoBasis::Theta { dep: j, ord: k }]);
            if !w.is_zero() {
                a = a.sub(&d_inv.mul(&w, ctx)?, ctx)?;
            }
            row.push(a.clone());
            if !a.is_zero() {
                form = form.add(
                    &Form::one_form(
                        CoBasis::Theta { dep: j, ord: 0 },
                        a.mul(&gk, ctx)?,
                    ),
                    ctx,
                )?;
            }
        }
        entries.push(row);
        thetas.push(form);
    }

    let det = determinant(&entries, ctx)?;
    if det.is_zero() {
        return Err(Error::DegenerateSymbolMatrix(format!(
            "symbol matrix of {} is singular",
            geo.name
        )));
    }
    Ok((varpi, thetas, SymbolMatrix { entries, det }))
}

/// Symbolic invariance: the prolonged generator annihilates the expression.
pub fn is_invariant_symbolic(
    e: &Rat,
    geo: &Geometry,
    gen_index: usize,
    max_ord: u32,
) -> Result<bool> {
    let ctx = &geo.jet_ctx;
    let k = jet_order(e, ctx);
    let x = geo.generators[gen_index].prolong(k, ctx, max_ord)?;
    Ok(x.apply(e, ctx)?.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse::parse;

    #[test]
    fn se2_tresse_coframe_matches_paper() {
        let geo = find("se2-tresse").unwrap();
        let (varpi, thetas, sym) = build_global_coframe(&geo, 12).unwrap();
        let ctx = &geo.jet_ctx;
        // vartheta_0 = 2 y2^3/(y1^2+1)^5 (dy - y1 dx)
        let coeff = thetas[0].coeff(&[CoBasis::Theta { dep: 0, ord: 0 }]);
        assert_eq!(coeff, parse(ctx, "2*y2^3/(y1^2+1)^5").unwrap());
        assert!(!sym.det.is_zero());
        // varpi(D) = 1 was checked inside; also check it has a dx part
        assert!(!varpi.coeff(&[CoBasis::Dx]).is_zero());
    }

    #[test]
    fn restriction_examples() {
        let geo = find("moebius2d-local").unwrap();
        let ctx = &geo.jet_ctx;
        // q restricted to the cross-section is 4 y5
        let q = geo.invariants[0].expr.clone().unwrap();
        let r = restrict_to_section(&q, &geo).unwrap();
        assert_eq!(r, parse(ctx, "4*y5").unwrap());
    }

    #[test]
    fn psl3_kappa_restriction() {
        let geo = find("psl3r-local").unwrap();
        let ctx = &geo.jet_ctx;
        let kappa = geo.invariants[0].expr.clone().unwrap();
        let r = restrict_to_section(&kappa, &geo).unwrap();
        // 8/3^(7/3) y7 = (8/27) c3j^2 y7
        assert_eq!(r, parse(ctx, "8/27 * c3j^2 * y7").unwrap());
    }

    #[test]
    fn catalog_loads_and_counts() {
        let cat = catalog().unwrap();
        assert!(cat.len() >= 10, "catalog has {} configs", cat.len());
        let geoms: std::collections::BTreeSet<&str> = cat
            .iter()
            .map(|g| {
                let n = g.name.as_str();
                n.split('-').next().unwrap()
            })
            .collect();
        assert!(geoms.len() >= 6, "geometries: {geoms:?}");
        // SE(3) invariant orders
        let se3 = cat.iter().find(|g| g.name == "se3-local").unwrap();
        assert_eq!(se3.invariants[0].order, 2);
        assert_eq!(se3.invariants[1].order, 3);
        // Conf(3) cross-section fixes dim SO(1,4) = 10 coordinates
        let conf = cat.iter().find(|g| g.name == "conf3").unwrap();
        assert_eq!(conf.cross_section.len(), 10);
        assert_eq!(conf.generators.len(), 10);
    }
}
