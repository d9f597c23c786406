//! Variable contexts: who the variables are, and the radical tower over them.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::rat::Rat;

/// Encoding capacity for derivative orders inside a `Var` id. This is not the
/// computational jet-order bound (that lives in engine options); it only fixes
/// the id layout.
pub const ORD_CAP: u32 = 512;
/// Radical variables live above this id.
pub const RAD_BASE: u32 = 1 << 24;

/// A variable handle. Interpretation depends on the owning `Ctx`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Var(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VarKind {
    /// The independent variable `x` (jet side only).
    X,
    /// `u^dep_ord` on the jet side.
    Dep { dep: u32, ord: u32 },
    /// `I^fam_der` on the invariant side.
    Fam { fam: u32, der: u32 },
    /// A radical generator, indexed into the tower.
    Radical { idx: u32 },
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Side {
    Jet,
    Inv,
}

#[derive(Clone, Debug)]
pub struct RadicalDecl {
    pub name: String,
    pub degree: u32,
    pub base: Rat,
}

/// A variable context: jet coordinates `(x, u^i_j)` or invariant symbols
/// `I^i_j`, plus an ordered tower of named radicals. Immutable once built.
#[derive(Clone, Debug)]
pub struct Ctx {
    pub side: Side,
    /// Dependent-variable names (jet side) or family names (invariant side).
    pub names: Vec<String>,
    pub radicals: Vec<RadicalDecl>,
    by_name: BTreeMap<String, u32>,
}

impl Ctx {
    pub fn jet(dep_names: &[&str]) -> Self {
        Ctx {
            side: Side::Jet,
            names: dep_names.iter().map(|s| s.to_string()).collect(),
            radicals: Vec::new(),
            by_name: BTreeMap::new(),
        }
    }

    pub fn inv(fam_names: &[&str]) -> Self {
        Ctx {
            side: Side::Inv,
            names: fam_names.iter().map(|s| s.to_string()).collect(),
            radicals: Vec::new(),
            by_name: BTreeMap::new(),
        }
    }

    pub fn n_deps(&self) -> usize {
        self.names.len()
    }

    pub fn x(&self) -> Var {
        debug_assert!(self.side == Side::Jet);
        Var(0)
    }

    pub fn dep(&self, dep: usize, ord: u32) -> Var {
        debug_assert!(self.side == Side::Jet);
        debug_assert!(dep < self.names.len());
        debug_assert!(ord < ORD_CAP);
        Var(1 + dep as u32 * ORD_CAP + ord)
    }

    pub fn fam(&self, fam: usize, der: u32) -> Var {
        debug_assert!(self.side == Side::Inv);
        debug_assert!(fam < self.names.len());
        debug_assert!(der < ORD_CAP);
        Var(fam as u32 * ORD_CAP + der)
    }

    pub fn radical_var(&self, idx: usize) -> Var {
        Var(RAD_BASE + idx as u32)
    }

    pub fn kind(&self, v: Var) -> VarKind {
        if v.0 >= RAD_BASE {
            return VarKind::Radical { idx: v.0 - RAD_BASE };
        }
        match self.side {
            Side::Jet => {
                if v.0 == 0 {
                    VarKind::X
                } else {
                    VarKind::Dep {
                        dep: (v.0 - 1) / ORD_CAP,
                        ord: (v.0 - 1) % ORD_CAP,
                    }
                }
            }
            Side::Inv => VarKind::Fam {
                fam: v.0 / ORD_CAP,
                der: v.0 % ORD_CAP,
            },
        }
    }

    pub fn radical_decl(&self, v: Var) -> Option<&RadicalDecl> {
        match self.kind(v) {
            VarKind::Radical { idx } => self.radicals.get(idx as usize),
            _ => None,
        }
    }

    pub fn is_radical(&self, v: Var) -> bool {
        v.0 >= RAD_BASE
    }

    /// Adjoin a named radical `r` with `r^degree = base`. The base may only
    /// reference already-declared variables and radicals.
    pub fn adjoin_radical(&mut self, name: &str, degree: u32, base: Rat) -> Result<Var> {
        if degree < 2 {
            return Err(Error::BadRadicalBase(name.into(), "degree must be >= 2".into()));
        }
        if base.is_zero() {
            return Err(Error::BadRadicalBase(name.into(), "base is zero".into()));
        }
        if self.by_name.contains_key(name) || self.names.iter().any(|n| n == name) {
            return Err(Error::DuplicateRadical(name.into()));
        }
        let next = self.radicals.len();
        for v in base.vars() {
            if let VarKind::Radical { idx } = self.kind(v) {
                if idx as usize >= next {
                    return Err(Error::BadRadicalBase(
                        name.into(),
                        "base references the radical itself or a later one".into(),
                    ));
                }
            }
        }
        self.by_name.insert(name.to_string(), next as u32);
        self.radicals.push(RadicalDecl {
            name: name.to_string(),
            degree,
            base,
        });
        Ok(self.radical_var(next))
    }

    pub fn radical_by_name(&self, name: &str) -> Option<Var> {
        self.by_name.get(name).map(|&i| self.radical_var(i as usize))
    }

    /// Render a variable name. Jet side: `x`, `y`, `y3`, `u2_5`; invariant
    /// side: family name with derivative suffix (`kappa`, `kappa2`).
    pub fn var_name(&self, v: Var) -> String {
        match self.kind(v) {
            VarKind::X => "x".to_string(),
            VarKind::Dep { dep, ord } => {
                let base = &self.names[dep as usize];
                if ord == 0 {
                    base.clone()
                } else {
                    format!("{base}{ord}")
                }
            }
            VarKind::Fam { fam, der } => {
                let base = &self.names[fam as usize];
                if der == 0 {
                    base.clone()
                } else {
                    format!("{base}{der}")
                }
            }
            VarKind::Radical { idx } => self.radicals[idx as usize].name.clone(),
        }
    }

    /// Resolve a name used in the expression grammar.
    ///
    /// Jet side accepts `x`, `<dep>`, `<dep><j>`, `<dep>_<j>` and the generic
    /// `u<i>_<j>` form. Invariant side accepts `<family>`, `<family><j>`,
    /// `<family>_<j>`. Radicals resolve by their declared name on both sides.
    pub fn resolve_name(&self, name: &str) -> Result<Var> {
        if let Some(v) = self.radical_by_name(name) {
            return Ok(v);
        }
        match self.side {
            Side::Jet => {
                if name == "x" {
                    return Ok(self.x());
                }
                // generic u{i}_{j} form, 1-based dependent index
                if let Some(rest) = name.strip_prefix('u') {
                    if let Some((i, j)) = rest.split_once('_') {
                        if let (Ok(i), Ok(j)) = (i.parse::<usize>(), j.parse::<u32>()) {
                            if i >= 1 && i <= self.names.len() && j < ORD_CAP {
                                return Ok(self.dep(i - 1, j));
                            }
                        }
                    }
                }
                for (d, dn) in self.names.iter().enumerate() {
                    if name == dn {
                        return Ok(self.dep(d, 0));
                    }
                    if let Some(rest) = name.strip_prefix(dn.as_str()) {
                        let rest = rest.strip_prefix('_').unwrap_or(rest);
                        if let Ok(j) = rest.parse::<u32>() {
                            if j < ORD_CAP {
                                return Ok(self.dep(d, j));
                            }
                        }
                    }
                }
                Err(Error::UnknownVariable(name.into()))
            }
            Side::Inv => {
                // longest family-name match wins (e.g. `q1` vs a family named `q1`)
                let mut best: Option<(usize, u32)> = None;
                for (f, fname) in self.names.iter().enumerate() {
                    if name == fname {
                        best = Some((f, 0));
                        break;
                    }
                    if let Some(rest) = name.strip_prefix(fname.as_str()) {
                        let rest = rest.strip_prefix('_').unwrap_or(rest);
                        if let Ok(j) = rest.parse::<u32>() {
                            if j < ORD_CAP {
                                match best {
                                    Some((bf, _)) if self.names[bf].len() >= fname.len() => {}
                                    _ => best = Some((f, j)),
                                }
                            }
                        }
                    }
                }
                if let Some((f, j)) = best {
                    return Ok(self.fam(f, j));
                }
                Err(Error::UnknownVariable(name.into()))
            }
        }
    }
}
