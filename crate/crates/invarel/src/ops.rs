//! The non-commutative algebra of differential operators `P = sum p_i D^i`
//! in one abstract derivation over a differential field, with composition,
//! formal adjoints and matrix variants. The same code serves jet
//! coefficients (`D = gamma D_x`) and abstract invariants (`D = nabla`).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::ctx::Ctx;
use crate::expr::rat::Rat;
use crate::invariant::nabla;
use crate::jet::total_derivative;

/// A coefficient domain together with its derivation.
pub trait DiffField: Clone {
    fn ctx(&self) -> &Ctx;
    fn derive(&self, e: &Rat) -> Result<Rat>;
}

/// Abstract invariant field with `delta = nabla`.
#[derive(Clone, Debug)]
pub struct InvField {
    pub ctx: Arc<Ctx>,
}

impl DiffField for InvField {
    fn ctx(&self) -> &Ctx {
        &self.ctx
    }
    fn derive(&self, e: &Rat) -> Result<Rat> {
        nabla(e, &self.ctx)
    }
}

/// Jet coefficient field with `delta = gamma * D_x`.
#[derive(Clone, Debug)]
pub struct JetField {
    pub ctx: Arc<Ctx>,
    pub gamma: Rat,
    pub max_ord: u32,
}

impl DiffField for JetField {
    fn ctx(&self) -> &Ctx {
        &self.ctx
    }
    fn derive(&self, e: &Rat) -> Result<Rat> {
        let d = total_derivative(e, &self.ctx, self.max_ord)?;
        self.gamma.mul(&d, &self.ctx)
    }
}

/// `P = sum_{i=0}^k p_i D^i`; `coeffs[i] = p_i`, trimmed so the leading
/// coefficient of a nonzero operator is nonzero.
#[derive(Clone, Debug)]
pub struct DiffOp<F: DiffField> {
    pub field: F,
    pub coeffs: Vec<Rat>,
}

impl<F: DiffField> PartialEq for DiffOp<F> {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs
    }
}

impl<F: DiffField> DiffOp<F> {
    pub fn zero(field: F) -> Self {
        DiffOp {
            field,
            coeffs: Vec::new(),
        }
    }

    pub fn from_coeffs(field: F, coeffs: Vec<Rat>) -> Self {
        let mut op = DiffOp { field, coeffs };
        op.trim();
        op
    }

    /// Multiplication operator by a field element.
    pub fn mult(field: F, c: Rat) -> Self {
        DiffOp::from_coeffs(field, vec![c])
    }

    /// The bare derivation to a power.
    pub fn derivation(field: F, power: usize) -> Self {
        let mut coeffs = vec![Rat::zero(); power + 1];
        coeffs[power] = Rat::one();
        DiffOp { field, coeffs }
    }

    fn trim(&mut self) {
        while self.coeffs.last().map_or(false, |c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn order(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeff(&self, i: usize) -> Rat {
        self.coeffs.get(i).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn apply(&self, f: &Rat) -> Result<Rat> {
        let ctx = self.field.ctx();
        let mut acc = Rat::zero();
        let mut df = f.clone();
        for (i, p) in self.coeffs.iter().enumerate() {
            if i > 0 {
                df = self.field.derive(&df)?;
            }
            if !p.is_zero() {
                acc = acc.add(&p.mul(&df, ctx)?, ctx)?;
            }
        }
        Ok(acc)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let ctx = self.field.ctx();
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for i in 0..n {
            coeffs.push(self.coeff(i).add(&other.coeff(i), ctx)?);
        }
        Ok(DiffOp::from_coeffs(self.field.clone(), coeffs))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        DiffOp {
            field: self.field.clone(),
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }

    /// Left multiplication by a field element.
    pub fn scale(&self, c: &Rat) -> Result<Self> {
        let ctx = self.field.ctx();
        let coeffs = self
            .coeffs
            .iter()
            .map(|p| p.mul(c, ctx))
            .collect::<Result<Vec<_>>>()?;
        Ok(DiffOp::from_coeffs(self.field.clone(), coeffs))
    }

    /// `D ∘ self`: coefficients shift up plus Leibniz derivative.
    fn derive_compose(&self) -> Result<Self> {
        let mut coeffs = vec![Rat::zero(); self.coeffs.len() + 1];
        for (i, p) in self.coeffs.iter().enumerate() {
            let dp = self.field.derive(p)?;
            coeffs[i] = coeffs[i].add(&dp, self.field.ctx())?;
            coeffs[i + 1] = coeffs[i + 1].add(p, self.field.ctx())?;
        }
        Ok(DiffOp::from_coeffs(self.field.clone(), coeffs))
    }

    /// Operator composition: `(P ∘ Q)(f) = P(Q(f))`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let mut acc = DiffOp::zero(self.field.clone());
        let mut dq = other.clone();
        for (i, p) in self.coeffs.iter().enumerate() {
            if i > 0 {
                dq = dq.derive_compose()?;
            }
            if !p.is_zero() {
                acc = acc.add(&dq.scale(p)?)?;
            }
        }
        Ok(acc)
    }

    /// Formal adjoint: `P*(F) = sum_i (-D)^i (p_i F)`, expanded and
    /// collected. The sum starts at i = 0, which is what `(P*)* = P`
    /// requires.
    pub fn adjoint(&self) -> Result<Self> {
        let mut acc = DiffOp::zero(self.field.clone());
        for (i, p) in self.coeffs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let mut term = DiffOp::mult(self.field.clone(), p.clone());
            for _ in 0..i {
                term = term.derive_compose()?;
            }
            if i % 2 == 1 {
                term = term.neg();
            }
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }
}

/// Rectangular matrix of operators over a shared field.
#[derive(Clone, Debug)]
pub struct DiffOpMatrix<F: DiffField> {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<DiffOp<F>>,
}

impl<F: DiffField> DiffOpMatrix<F> {
    pub fn new(rows: usize, cols: usize, entries: Vec<DiffOp<F>>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(DiffOpMatrix { rows, cols, entries })
    }

    pub fn at(&self, r: usize, c: usize) -> &DiffOp<F> {
        &self.entries[r * self.cols + c]
    }

    /// `(A*)_{ji} = (A_{ij})*`: transposed adjoint entries.
    pub fn adjoint(&self) -> Result<Self> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                entries.push(self.at(r, c).adjoint()?);
            }
        }
        DiffOpMatrix::new(self.cols, self.rows, entries)
    }

    /// Apply to a vector of field elements: `(A v)_r = sum_c A_{rc}(v_c)`.
    pub fn apply_vec(&self, v: &[Rat]) -> Result<Vec<Rat>> {
        if v.len() != self.cols {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let ctx = self.entries[0].field.ctx();
            let mut acc = Rat::zero();
            for c in 0..self.cols {
                acc = acc.add(&self.at(r, c).apply(&v[c])?, ctx)?;
            }
            out.push(acc);
        }
        Ok(out)
    }
}

/// `E_inv(L) = A* E(L) - B* H(L)` given the adjoint data directly.
pub fn e_inv<F: DiffField>(
    astar: &DiffOpMatrix<F>,
    bstar: &[DiffOp<F>],
    eulerian: &[Rat],
    hamiltonian: &Rat,
) -> Result<Vec<Rat>> {
    if astar.rows != bstar.len() {
        return Err(Error::ShapeMismatch(format!(
            "A* has {} rows but B* has {} components",
            astar.rows,
            bstar.len()
        )));
    }
    let a_part = astar.apply_vec(eulerian)?;
    let mut out = Vec::with_capacity(a_part.len());
    for (r, a) in a_part.iter().enumerate() {
        let ctx = bstar[r].field.ctx();
        let b = bstar[r].apply(hamiltonian)?;
        out.push(a.sub(&b, ctx)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse::parse;

    fn inv_field(fams: &[&str]) -> InvField {
        InvField {
            ctx: Arc::new(Ctx::inv(fams)),
        }
    }

    fn p(f: &InvField, s: &str) -> Rat {
        parse(f.ctx(), s).unwrap()
    }

    #[test]
    fn apply_and_shift() {
        let f = inv_field(&["I"]);
        let nab = DiffOp::derivation(f.clone(), 1);
        assert_eq!(nab.apply(&p(&f, "I")).unwrap(), p(&f, "I1"));

        // (2 I^2 D^2 + 3 I I1 D + I(I2 + 2I))(1) = I I2 + 2 I^2
        let op = DiffOp::from_coeffs(
            f.clone(),
            vec![p(&f, "I*(I2+2*I)"), p(&f, "3*I*I1"), p(&f, "2*I^2")],
        );
        assert_eq!(op.apply(&Rat::one()).unwrap(), p(&f, "I*I2 + 2*I^2"));
    }

    #[test]
    fn compose_leibniz() {
        let f = inv_field(&["I"]);
        // nabla ∘ a = a nabla + a'
        let a = p(&f, "I^2");
        let nab = DiffOp::derivation(f.clone(), 1);
        let comp = nab.compose(&DiffOp::mult(f.clone(), a.clone())).unwrap();
        assert_eq!(comp.coeff(1), a);
        assert_eq!(comp.coeff(0), p(&f, "2*I*I1"));

        // nabla ∘ nabla applied to I gives I2
        let n2 = nab.compose(&nab).unwrap();
        assert_eq!(n2.apply(&p(&f, "I")).unwrap(), p(&f, "I2"));
    }

    #[test]
    fn adjoint_examples_from_se2() {
        let f = inv_field(&["I"]);
        // adjoint(nabla) = -nabla
        let nab = DiffOp::derivation(f.clone(), 1);
        assert_eq!(nab.adjoint().unwrap(), nab.neg());

        // A = 2 I^2 D^2 + 3 I I1 D + I(I2 + 2 I)
        let a = DiffOp::from_coeffs(
            f.clone(),
            vec![p(&f, "I*(I2+2*I)"), p(&f, "3*I*I1"), p(&f, "2*I^2")],
        );
        let astar = a.adjoint().unwrap();
        assert_eq!(astar.coeff(2), p(&f, "2*I^2"));
        assert_eq!(astar.coeff(1), p(&f, "5*I*I1"));
        assert_eq!(astar.coeff(0), p(&f, "2*I*I2 + I1^2 + 2*I^2"));

        // B = I D^2 + 3/2 I1 D + 1/2 I2
        let b = DiffOp::from_coeffs(
            f.clone(),
            vec![p(&f, "I2/2"), p(&f, "3/2*I1"), p(&f, "I")],
        );
        let bstar = b.adjoint().unwrap();
        assert_eq!(bstar.coeff(2), p(&f, "I"));
        assert_eq!(bstar.coeff(1), p(&f, "1/2*I1"));
        assert!(bstar.coeff(0).is_zero());

        // involution
        assert_eq!(astar.adjoint().unwrap(), a);
        assert_eq!(bstar.adjoint().unwrap(), b);
    }

    #[test]
    fn matrix_adjoint_transposes() {
        let f = inv_field(&["kappa", "tau"]);
        // SE(3)-style entries: A_y^kappa = D^2 + (kappa^2 - tau^2),
        // A_z^kappa = -(2 tau D + tau1)
        let a_yk = DiffOp::from_coeffs(
            f.clone(),
            vec![p(&f, "kappa^2 - tau^2"), Rat::zero(), Rat::one()],
        );
        let a_zk = DiffOp::from_coeffs(f.clone(), vec![p(&f, "-tau1"), p(&f, "-2*tau")]);
        let m = DiffOpMatrix::new(1, 2, vec![a_yk.clone(), a_zk]).unwrap();
        let ms = m.adjoint().unwrap();
        // (y,kappa) entry keeps D^2 + (kappa^2 - tau^2); (z,kappa) becomes
        // 2 tau D + tau1
        assert_eq!(ms.at(0, 0), &a_yk);
        assert_eq!(ms.at(1, 0).coeff(1), p(&f, "2*tau"));
        assert_eq!(ms.at(1, 0).coeff(0), p(&f, "tau1"));
    }

    #[test]
    fn moebius_global_substitution_identity() {
        // (q1^{-1/2} nabla)^2 = q1^{-1} nabla^2 - q2/(2 q1^2) nabla
        // in the field where nabla(q) = q1 and sq^2 = q1
        let mut ctx = Ctx::inv(&["q"]);
        let base = parse(&ctx, "q1").unwrap();
        ctx.adjoin_radical("sq", 2, base).unwrap();
        let f = InvField { ctx: Arc::new(ctx) };
        let half = DiffOp::from_coeffs(
            f.clone(),
            vec![Rat::zero(), p(&f, "1/sq")],
        );
        let sq2 = half.compose(&half).unwrap();
        assert_eq!(sq2.coeff(2), p(&f, "1/q1"));
        assert_eq!(sq2.coeff(1), p(&f, "-q2/(2*q1^2)"));
    }
}
