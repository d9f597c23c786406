//! Step 7 and assembly: the invariant Euler-Lagrange data for a Lagrangian,
//! solved forms and the singular locus.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::ctx::{Ctx, Var, VarKind};
use crate::expr::rat::Rat;
use crate::geometry::{CoframeSpec, Geometry};
use crate::invariant::{eulerian, hamiltonian};
use crate::ops::{e_inv as e_inv_apply, DiffOp, DiffOpMatrix, InvField};
use crate::q::Q;

use super::ab::{compute_ab, ABData};
use super::frame::solve_maurer_cartan;
use super::rewrite::{contact_rewrite, contact_rewrite_on_section};
use super::Options;

#[derive(Clone, Debug)]
pub struct ELResult {
    pub geometry: String,
    pub lagrangian: Rat,
    pub a: DiffOpMatrix<InvField>,
    pub b: Vec<DiffOp<InvField>>,
    pub a_star: DiffOpMatrix<InvField>,
    pub b_star: Vec<DiffOp<InvField>>,
    pub eulerian: Vec<Rat>,
    pub hamiltonian: Rat,
    pub e_inv: Vec<Rat>,
    /// Relative invariant, when the coframe admits explicit expressions.
    pub w: Option<Vec<Vec<Rat>>>,
    /// Which coframe the operators are written in.
    pub coframe_note: String,
}

/// A solved-form equation: `top = rhs`, after removing `factor`.
#[derive(Clone, Debug)]
pub struct SolvedEquation {
    pub top: Var,
    pub rhs: Rat,
    pub dropped_factor: Rat,
}

impl ELResult {
    /// Isolate the highest invariant derivative in each nonzero component,
    /// reporting the overall monomial factor that was dropped.
    pub fn solved_forms(&self, ctx: &Ctx) -> Result<Vec<Option<SolvedEquation>>> {
        self.e_inv
            .iter()
            .map(|c| solve_top(c, ctx))
            .collect()
    }
}

/// Extract the monomial-and-constant content of a numerator.
fn monomial_content(p: &crate::expr::poly::Poly) -> (crate::expr::poly::Mono, Q) {
    if p.is_zero() {
        return (crate::expr::poly::Mono::one(), Q::from_integer(0.into()));
    }
    let m = p
        .terms
        .iter()
        .skip(1)
        .fold(p.terms[0].0.clone(), |acc, (mm, _)| acc.gcd(mm));
    let c = p.content();
    (m, c)
}

/// Solve a component for its top derivative; `None` for the zero component.
pub fn solve_top(c: &Rat, ctx: &Ctx) -> Result<Option<SolvedEquation>> {
    if c.is_zero() {
        return Ok(None);
    }
    // drop the monomial/constant factor from the numerator
    let (mono, content) = monomial_content(&c.num);
    let stripped = c
        .num
        .div_exact(&crate::expr::poly::Poly {
            terms: vec![(mono.clone(), content.clone())],
        })
        .expect("monomial content divides");
    let dropped = Rat {
        num: crate::expr::poly::Poly {
            terms: vec![(mono, content)],
        },
        den: c.den.clone(),
    };
    // top symbol: highest derivative order, then family
    let top = stripped
        .vars()
        .into_iter()
        .filter_map(|v| match ctx.kind(v) {
            VarKind::Fam { fam, der } => Some((der, fam, v)),
            _ => None,
        })
        .max();
    let Some((_, _, top)) = top else {
        return Err(Error::NotSolvable(
            "component has no invariant symbols".into(),
        ));
    };
    if stripped.degree_in(top) != 1 {
        return Err(Error::NotSolvable(format!(
            "nonlinear in {}",
            ctx.var_name(top)
        )));
    }
    let coeffs = stripped.coeffs_in(top);
    let rhs = Rat::from_poly(coeffs[0].clone())
        .neg()
        .div(&Rat::from_poly(coeffs[1].clone()), ctx)?;
    Ok(Some(SolvedEquation {
        top,
        rhs,
        dropped_factor: dropped,
    }))
}

/// Full pipeline for one geometry and Lagrangian.
pub fn invariant_euler_lagrange(geo: &Geometry, l: &Rat, opts: &Options) -> Result<ELResult> {
    if geo.derived.is_some() {
        return super::derived::run(geo, l, opts);
    }
    match &geo.coframe {
        CoframeSpec::Explicit { .. } | CoframeSpec::Construct => {
            super::explicit::run(geo, l, opts)
        }
        CoframeSpec::Invariantize => run_abstract(geo, l, opts),
    }
}

pub(super) fn run_abstract(geo: &Geometry, l: &Rat, opts: &Options) -> Result<ELResult> {
    let mut frame = solve_maurer_cartan(geo, opts)?;
    // determine the table order from the vertical differentials
    let mut need = 1u32;
    let mut dvs = Vec::new();
    for fam in 0..geo.invariants.len() {
        let dv = super::ab::dv_invariant(geo, &mut frame, fam, opts)?;
        need = need.max(dv.max_order());
        dvs.push(dv);
    }
    let phi = super::ab::dv_varpi(geo, &mut frame, opts)?;
    need = need.max(phi.max_order());
    let table = if opts.on_section {
        contact_rewrite_on_section(geo, &mut frame, need, opts)?
    } else {
        contact_rewrite(geo, &mut frame, need, opts)?
    };
    let ab = compute_ab(geo, &mut frame, &table, opts)?;
    let w = match super::w::compute_w(geo, Some(&mut frame), opts) {
        Ok(w) => Some(w),
        Err(_) if geo.candidates.is_empty() => None,
        Err(e) => return Err(e),
    };
    assemble(geo, l, ab, w, "invariantized coframe")
}

pub(super) fn assemble(
    geo: &Geometry,
    l: &Rat,
    ab: ABData,
    w: Option<Vec<Vec<Rat>>>,
    note: &str,
) -> Result<ELResult> {
    let inv_ctx = &geo.inv_ctx;
    let n_fam = geo.invariants.len();
    let mut eu = eulerian(l, inv_ctx)?;
    for extra in eu.iter().skip(n_fam) {
        if !extra.is_zero() {
            return Err(Error::Config(
                "Lagrangian depends on internal helper symbols".into(),
            ));
        }
    }
    eu.truncate(n_fam);
    let ham = hamiltonian(l, inv_ctx)?;
    let e_inv = e_inv_apply(&ab.a_star, &ab.b_star, &eu, &ham)?;
    for c in &e_inv {
        super::frame::assert_no_helpers(geo, c)?;
    }
    Ok(ELResult {
        geometry: geo.name.clone(),
        lagrangian: l.clone(),
        a: ab.a,
        b: ab.b,
        a_star: ab.a_star,
        b_star: ab.b_star,
        eulerian: eu,
        hamiltonian: ham,
        e_inv,
        w,
        coframe_note: note.to_string(),
    })
}

/// The locus where W degenerates, with solved equations where resolvable.
#[derive(Clone, Debug)]
pub struct SingularReport {
    pub det: Rat,
    /// Radical monomial factor and the remaining rational part of det(W)'s
    /// numerator.
    pub radical_factor: String,
    pub rational_part: Rat,
    /// Solved equations of the vanishing locus (from det for scalar W, from
    /// W * e_inv when an ELResult is supplied).
    pub solved: Vec<(String, Rat)>,
}

pub fn singular_locus(
    geo: &Geometry,
    result: Option<&ELResult>,
    opts: &Options,
) -> Result<SingularReport> {
    let jet_ctx = &geo.jet_ctx;
    let w = match result.and_then(|r| r.w.clone()) {
        Some(w) => w,
        None => super::w::compute_w(geo, None, opts)?,
    };
    let n = w.len();
    let rows: Vec<Vec<Rat>> = w.clone();
    let det = crate::expr::solve::determinant(&rows, jet_ctx)?;
    // split off the radical monomial from the numerator
    let (mono, _) = monomial_content(&det.num);
    let mut rad_mono = crate::expr::poly::Mono::one();
    for &(v, e) in &mono.0 {
        if jet_ctx.is_radical(v) {
            rad_mono = rad_mono.mul(&crate::expr::poly::Mono(vec![(v, e)]));
        }
    }
    let radical_factor = if rad_mono.is_one() {
        "1".to_string()
    } else {
        let p = crate::expr::poly::Poly {
            terms: vec![(rad_mono.clone(), Q::from_integer(1.into()))],
        };
        Rat::from_poly(p).to_text(jet_ctx)
    };
    let rational_part = det.div(
        &Rat::from_poly(crate::expr::poly::Poly {
            terms: vec![(rad_mono, Q::from_integer(1.into()))],
        }),
        jet_ctx,
    )?;

    let mut solved = Vec::new();
    if n == 1 {
        // scalar W: solve numerator = 0 for the top jet variable
        if let Some(eq) = solve_top_jet(&w[0][0], jet_ctx)? {
            solved.push(eq);
        }
    } else if let Some(res) = result {
        // W * e_inv = 0 componentwise, with invariant symbols realized
        let vals: Vec<Rat> = res
            .e_inv
            .iter()
            .map(|c| {
                c.as_q()
                    .map(Rat::from_q)
                    .ok_or_else(|| Error::NotSolvable("e_inv is not constant".into()))
            })
            .collect::<Result<_>>()?;
        for r in 0..n {
            let mut acc = Rat::zero();
            for c in 0..n {
                acc = acc.add(&w[r][c].mul(&vals[c], jet_ctx)?, jet_ctx)?;
            }
            if acc.is_zero() {
                continue;
            }
            if let Some(eq) = solve_top_jet(&acc, jet_ctx)? {
                solved.push(eq);
            }
        }
    }
    Ok(SingularReport {
        det,
        radical_factor,
        rational_part,
        solved,
    })
}

fn solve_top_jet(e: &Rat, ctx: &Ctx) -> Result<Option<(String, Rat)>> {
    if e.is_zero() {
        return Ok(None);
    }
    let top = e
        .num
        .vars()
        .into_iter()
        .filter_map(|v| match ctx.kind(v) {
            VarKind::Dep { dep, ord } => Some(((ord, dep), v)),
            _ => None,
        })
        .max();
    let Some((_, top)) = top else {
        return Ok(None);
    };
    if e.num.degree_in(top) != 1 {
        return Ok(None);
    }
    let cs = e.num.coeffs_in(top);
    let rhs = Rat::from_poly(cs[0].clone())
        .neg()
        .div(&Rat::from_poly(cs[1].clone()), ctx)?;
    Ok(Some((ctx.var_name(top), rhs)))
}

/// Map an invariant point-evaluation of e_inv components through explicit
/// realizations; used by tests.
pub fn eval_invariant(
    e: &Rat,
    values: &BTreeMap<Var, Q>,
    ctx: &Ctx,
) -> Result<Q> {
    e.eval(values, ctx)
}
