//! Declarative geometry configuration: the JSON schema and the loader that
//! turns it into typed contexts, generators and coframes. Built-in
//! geometries load through the same path as user-supplied files.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expr::ctx::{Ctx, Var};
use crate::expr::parse::{parse, parse_with};
use crate::expr::rat::Rat;
use crate::jet::form::{CoBasis, Form};
use crate::jet::vf::VectorField;
use crate::q::Q;
use num_traits::One;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub name: String,
    pub dimension: usize,
    pub dependents: Vec<String>,
    #[serde(default)]
    pub defs: Vec<DefEntry>,
    #[serde(default)]
    pub generators: Vec<BTreeMap<String, String>>,
    #[serde(default)]
    pub cross_section: Vec<CrossSectionEntry>,
    #[serde(default)]
    pub radicals: Vec<RadicalEntry>,
    #[serde(default)]
    pub invariants: Vec<InvariantEntry>,
    #[serde(default)]
    pub invariant_radicals: Vec<InvRadicalEntry>,
    #[serde(default)]
    pub derivation: Option<DerivationEntry>,
    #[serde(default)]
    pub varpi_scale: Option<String>,
    #[serde(default)]
    pub coframe: Option<CoframeEntry>,
    #[serde(default)]
    pub coframe_candidates: Vec<CandidateEntry>,
    /// Rescaling of the geometry's order-0 coframe against the
    /// invariantized one: `vartheta_0^i = scale_i * iota(theta_0^i)`.
    #[serde(default)]
    pub coframe_iota_scale: Vec<String>,
    #[serde(default)]
    pub signature: Option<Vec<usize>>,
    #[serde(default)]
    pub lagrangian_density: Option<String>,
    #[serde(default)]
    pub sampler: Option<String>,
    #[serde(default)]
    pub latex: Option<LatexEntry>,
    #[serde(default)]
    pub derived: Option<DerivedEntry>,
    #[serde(default)]
    pub section_seeds: Vec<SeedEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefEntry {
    pub name: String,
    /// Expression over jet variables, radicals and earlier defs.
    #[serde(default)]
    pub expr: Option<String>,
    /// Alternatively, `by * D_x` applied to an earlier def.
    #[serde(default)]
    pub d_of: Option<String>,
    #[serde(default)]
    pub by: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossSectionEntry {
    pub var: String,
    pub value: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadicalEntry {
    pub name: String,
    pub degree: u32,
    pub base: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantEntry {
    pub name: String,
    pub order: u32,
    #[serde(default)]
    pub expr: Option<String>,
    #[serde(default)]
    pub iota_of: Option<String>,
    /// Invariant-side value of `iota(iota_of)`; defaults to the invariant
    /// symbol itself. Must be a constant multiple of the symbol.
    #[serde(default)]
    pub iota_value: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvRadicalEntry {
    pub name: String,
    pub degree: u32,
    pub base: String,
    /// Jet realization (jet grammar), when the radical has one.
    #[serde(default)]
    pub realize: Option<String>,
    /// For derived geometries: the radical as an expression over the base
    /// geometry's invariant field.
    #[serde(default)]
    pub old_expr: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivationEntry {
    pub gamma: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoframeEntry {
    pub mode: String, // "explicit" | "construct" | "invariantize"
    #[serde(default)]
    pub varpi: Option<Vec<FormTermEntry>>,
    #[serde(default)]
    pub thetas: Option<Vec<Vec<FormTermEntry>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormTermEntry {
    /// "dx", "d<dep>" (order-0 differential) or "theta_<dep>_<ord>".
    pub on: String,
    pub coeff: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateEntry {
    /// Explicit invariant (jet grammar) whose top-order symbol builds the
    /// order-0 contact candidate.
    pub expr: String,
    pub order: u32,
    /// When set, the candidate is already `iota(theta_0)` for its contact
    /// direction; no cross-section normalisation is applied (used where the
    /// restriction is a removable singularity).
    #[serde(default)]
    pub normalized: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatexEntry {
    #[serde(default)]
    pub derivation: Option<String>,
    #[serde(default)]
    pub families: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivedEntry {
    pub base: String,
    /// New families as expressions over the base invariant field.
    pub families_old: Vec<String>,
    /// `nabla_new = (factor) * nabla_old`, in base symbols.
    pub nabla_factor_old: String,
    /// The same factor in new symbols (may use the new radicals).
    pub nabla_factor_new: String,
    /// Diagonal rescaling of the order-0 coframe: `theta_new^i = S_i *
    /// iota(theta_0^i)`, in new symbols.
    pub coframe_scale: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedEntry {
    /// Free jet coordinate (jet grammar name) anchoring the dictionary.
    pub var: String,
    /// Its invariantization (invariant grammar, may use invariant radicals).
    pub value: String,
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct InvariantDecl {
    pub name: String,
    pub order: u32,
    pub expr: Option<Rat>,
    pub iota_of: Option<Rat>,
}

#[derive(Debug, Clone)]
pub enum CoframeSpec {
    Invariantize,
    Construct,
    Explicit { varpi: Form, thetas: Vec<Form> },
}

#[derive(Debug, Clone)]
pub struct DerivedSpec {
    pub base: String,
    pub families_old: Vec<String>,
    pub nabla_factor_old: String,
    pub nabla_factor_new: String,
    pub coframe_scale: Vec<String>,
    pub radical_old_exprs: Vec<Option<String>>,
}

/// A loaded geometry: contexts, generators, cross-section, invariants and
/// coframe data, immutable after load.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub name: String,
    pub dimension: usize,
    pub jet_ctx: Arc<Ctx>,
    pub inv_ctx: Arc<Ctx>,
    pub generators: Vec<VectorField>,
    pub cross_section: Vec<(Var, Q)>,
    pub invariants: Vec<InvariantDecl>,
    pub inv_radical_realize: Vec<Option<Rat>>,
    pub gamma: Option<Rat>,
    pub varpi_scale: Rat,
    pub coframe: CoframeSpec,
    /// (explicit invariant, its order, already-normalised flag)
    pub candidates: Vec<(Rat, u32, bool)>,
    /// vartheta_0^i = scale_i * iota(theta_0^i); empty means identity.
    pub coframe_iota_scale: Vec<Rat>,
    /// Jet-side named defs, for rendering and tests.
    pub defs: BTreeMap<String, Rat>,
    /// iota_value constants: invariant i satisfies c_i * I_i = iota(seed_i).
    pub iota_const: Vec<Q>,
    pub section_seeds: Vec<(Var, Rat)>,
    pub derived: Option<DerivedSpec>,
    pub sampler: Option<String>,
    pub latex_derivation: String,
    pub latex_families: BTreeMap<String, String>,
}

impl Geometry {
    pub fn n_contact(&self) -> usize {
        self.dimension - 1
    }

    pub fn dim_algebra(&self) -> usize {
        self.generators.len()
    }

    pub fn family_index(&self, name: &str) -> Option<usize> {
        self.invariants.iter().position(|i| i.name == name)
    }
}

fn parse_form(
    ctx: &Ctx,
    defs: &BTreeMap<String, Rat>,
    terms: &[FormTermEntry],
    max_ord: u32,
) -> Result<Form> {
    let mut out = Form::zero(1);
    for t in terms {
        let coeff = parse_with(ctx, Some(defs), &t.coeff)?;
        let basis = parse_basis(ctx, &t.on)?;
        out = out.add(&Form::one_form(basis, coeff), ctx)?;
    }
    out.to_contact_basis(ctx, max_ord)
}

fn parse_basis(ctx: &Ctx, s: &str) -> Result<CoBasis> {
    if s == "dx" {
        return Ok(CoBasis::Dx);
    }
    if let Some(rest) = s.strip_prefix("theta_") {
        let mut it = rest.rsplitn(2, '_');
        let ord: u32 = it
            .next()
            .and_then(|o| o.parse().ok())
            .ok_or_else(|| Error::Config(format!("bad basis `{s}`")))?;
        let dep_name = it
            .next()
            .ok_or_else(|| Error::Config(format!("bad basis `{s}`")))?;
        let dep = ctx
            .names
            .iter()
            .position(|n| n == dep_name)
            .ok_or_else(|| Error::UnknownVariable(dep_name.to_string()))?;
        return Ok(CoBasis::Theta { dep, ord });
    }
    if let Some(name) = s.strip_prefix('d') {
        if let Some(dep) = ctx.names.iter().position(|n| n == name) {
            return Ok(CoBasis::Du { dep, ord: 0 });
        }
    }
    Err(Error::Config(format!("unknown basis element `{s}`")))
}

/// Load a geometry from its parsed config file.
pub fn load(cfg: &ConfigFile) -> Result<Geometry> {
    if cfg.dependents.len() + 1 != cfg.dimension {
        return Err(Error::Config(format!(
            "dimension {} needs {} dependents, got {}",
            cfg.dimension,
            cfg.dimension - 1,
            cfg.dependents.len()
        )));
    }
    let dep_names: Vec<&str> = cfg.dependents.iter().map(|s| s.as_str()).collect();
    let mut jet_ctx = Ctx::jet(&dep_names);
    // radicals and defs may reference each other (declared order within each
    // list is respected); resolve by fixpoint iteration
    let mut defs: BTreeMap<String, Rat> = BTreeMap::new();
    let mut pending_rad: Vec<&RadicalEntry> = cfg.radicals.iter().collect();
    let mut pending_def: Vec<&DefEntry> = cfg.defs.iter().collect();
    loop {
        let before = pending_rad.len() + pending_def.len();
        if before == 0 {
            break;
        }
        if !pending_rad.is_empty() {
            let r = pending_rad[0];
            if let Ok(base) = parse_with(&jet_ctx, Some(&defs), &r.base) {
                jet_ctx.adjoin_radical(&r.name, r.degree, base)?;
                pending_rad.remove(0);
            }
        }
        if !pending_def.is_empty() {
            let d = pending_def[0];
            let val = if let Some(e) = &d.expr {
                parse_with(&jet_ctx, Some(&defs), e).ok()
            } else if let Some(src_name) = &d.d_of {
                let by = d.by.as_deref().unwrap_or("1");
                match (
                    defs.get(src_name).cloned(),
                    parse_with(&jet_ctx, Some(&defs), by),
                ) {
                    (Some(src_val), Ok(g)) => {
                        let dd = crate::jet::total_derivative(
                            &src_val,
                            &jet_ctx,
                            crate::engine::DEFAULT_MAX_ORDER,
                        )?;
                        Some(g.mul(&dd, &jet_ctx)?)
                    }
                    _ => None,
                }
            } else {
                return Err(Error::Config(format!(
                    "def `{}` needs expr or d_of",
                    d.name
                )));
            };
            if let Some(v) = val {
                defs.insert(d.name.clone(), v);
                pending_def.remove(0);
            }
        }
        if pending_rad.len() + pending_def.len() == before
            && (pending_rad.len() + pending_def.len()) > 0
        {
            // one more attempt for radicals further down the list
            let mut progressed = false;
            for i in 0..pending_rad.len() {
                if let Ok(base) = parse_with(&jet_ctx, Some(&defs), &pending_rad[i].base) {
                    let r = pending_rad.remove(i);
                    jet_ctx.adjoin_radical(&r.name, r.degree, base)?;
                    progressed = true;
                    break;
                }
            }
            if !progressed {
                return Err(Error::Config(format!(
                    "unresolvable defs/radicals: {:?} / {:?}",
                    pending_def.iter().map(|d| &d.name).collect::<Vec<_>>(),
                    pending_rad.iter().map(|r| &r.name).collect::<Vec<_>>()
                )));
            }
        }
    }

    // invariant families plus one internal helper family per dependent for
    // normalized coordinates awaiting resolution
    let mut fam_names: Vec<String> = cfg.invariants.iter().map(|i| i.name.clone()).collect();
    for d in &cfg.dependents {
        fam_names.push(format!("_n{d}"));
    }
    let fam_refs: Vec<&str> = fam_names.iter().map(|s| s.as_str()).collect();
    let mut inv_ctx = Ctx::inv(&fam_refs);
    let mut inv_radical_realize = Vec::new();
    for r in &cfg.invariant_radicals {
        let base = parse(&inv_ctx, &r.base)?;
        inv_ctx.adjoin_radical(&r.name, r.degree, base)?;
        inv_radical_realize.push(match &r.realize {
            Some(s) => Some(parse_with(&jet_ctx, Some(&defs), s)?),
            None => None,
        });
    }

    let mut generators = Vec::new();
    for g in &cfg.generators {
        let mut xi = Rat::zero();
        let mut phis = vec![Rat::zero(); dep_names.len()];
        for (var, expr) in g {
            let e = parse(&jet_ctx, expr)?;
            if var == "x" {
                xi = e;
            } else if let Some(d) = dep_names.iter().position(|n| n == var) {
                phis[d] = e;
            } else {
                return Err(Error::Config(format!(
                    "generator names unknown variable `{var}`"
                )));
            }
        }
        generators.push(VectorField::on_j0(xi, phis));
    }
    if let Some(flips) = &cfg.signature {
        for &k in flips {
            let g = generators
                .get_mut(k)
                .ok_or_else(|| Error::Config(format!("signature index {k} out of range")))?;
            g.xi = g.xi.neg();
        }
    }

    let mut cross_section = Vec::new();
    for e in &cfg.cross_section {
        let var = jet_ctx.resolve_name(&e.var)?;
        let val = parse(&jet_ctx, &e.value)?
            .as_q()
            .ok_or_else(|| Error::Config(format!("cross-section value `{}` not rational", e.value)))?;
        cross_section.push((var, val));
    }

    let mut invariants = Vec::new();
    let mut iota_const = Vec::new();
    for (idx, i) in cfg.invariants.iter().enumerate() {
        invariants.push(InvariantDecl {
            name: i.name.clone(),
            order: i.order,
            expr: match &i.expr {
                Some(s) => Some(parse_with(&jet_ctx, Some(&defs), s)?),
                None => None,
            },
            iota_of: match &i.iota_of {
                Some(s) => Some(parse_with(&jet_ctx, Some(&defs), s)?),
                None => None,
            },
        });
        let c = match &i.iota_value {
            None => Q::one(),
            Some(s) => {
                let v = parse(&inv_ctx, s)?;
                // must be const * (this invariant symbol)
                let sym = Rat::var(inv_ctx.fam(idx, 0));
                let ratio = v.div(&sym, &inv_ctx)?;
                ratio.as_q().ok_or_else(|| {
                    Error::Config(format!(
                        "iota_value for `{}` must be a constant multiple of it",
                        i.name
                    ))
                })?
            }
        };
        iota_const.push(c);
    }

    let gamma = match &cfg.derivation {
        Some(d) => Some(parse_with(&jet_ctx, Some(&defs), &d.gamma)?),
        None => None,
    };
    let varpi_scale = match &cfg.varpi_scale {
        Some(s) => parse(&inv_ctx, s)?,
        None => Rat::one(),
    };

    let coframe = match &cfg.coframe {
        None => CoframeSpec::Invariantize,
        Some(c) => match c.mode.as_str() {
            "invariantize" => CoframeSpec::Invariantize,
            "construct" => CoframeSpec::Construct,
            "explicit" => {
                let varpi = parse_form(
                    &jet_ctx,
                    &defs,
                    c.varpi
                        .as_ref()
                        .ok_or_else(|| Error::Config("explicit coframe needs varpi".into()))?,
                    crate::engine::DEFAULT_MAX_ORDER,
                )?;
                let thetas = c
                    .thetas
                    .as_ref()
                    .ok_or_else(|| Error::Config("explicit coframe needs thetas".into()))?
                    .iter()
                    .map(|t| parse_form(&jet_ctx, &defs, t, crate::engine::DEFAULT_MAX_ORDER))
                    .collect::<Result<Vec<_>>>()?;
                CoframeSpec::Explicit { varpi, thetas }
            }
            other => return Err(Error::Config(format!("unknown coframe mode `{other}`"))),
        },
    };

    let mut candidates = Vec::new();
    for c in &cfg.coframe_candidates {
        let e = parse_with(&jet_ctx, Some(&defs), &c.expr)?;
        candidates.push((e, c.order, c.normalized));
    }
    let mut coframe_iota_scale = Vec::new();
    for s in &cfg.coframe_iota_scale {
        coframe_iota_scale.push(parse(&inv_ctx, s)?);
    }

    let mut section_seeds = Vec::new();
    for s in &cfg.section_seeds {
        let var = jet_ctx.resolve_name(&s.var)?;
        let val = parse(&inv_ctx, &s.value)?;
        section_seeds.push((var, val));
    }

    let derived = cfg.derived.as_ref().map(|d| DerivedSpec {
        base: d.base.clone(),
        families_old: d.families_old.clone(),
        nabla_factor_old: d.nabla_factor_old.clone(),
        nabla_factor_new: d.nabla_factor_new.clone(),
        coframe_scale: d.coframe_scale.clone(),
        radical_old_exprs: cfg
            .invariant_radicals
            .iter()
            .map(|r| r.old_expr.clone())
            .collect(),
    });

    let (latex_derivation, latex_families) = match &cfg.latex {
        Some(l) => (
            l.derivation.clone().unwrap_or_else(|| "D".to_string()),
            l.families.clone(),
        ),
        None => ("D".to_string(), BTreeMap::new()),
    };

    Ok(Geometry {
        name: cfg.name.clone(),
        dimension: cfg.dimension,
        jet_ctx: Arc::new(jet_ctx),
        inv_ctx: Arc::new(inv_ctx),
        generators,
        cross_section,
        invariants,
        inv_radical_realize,
        gamma,
        varpi_scale,
        coframe,
        candidates,
        coframe_iota_scale,
        defs,
        iota_const,
        section_seeds,
        derived,
        sampler: cfg.sampler.clone(),
        latex_derivation,
        latex_families,
    })
}

pub fn load_str(s: &str) -> Result<Geometry> {
    let cfg: ConfigFile = serde_json::from_str(s)?;
    load(&cfg)
}
