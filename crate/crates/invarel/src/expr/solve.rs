//! Exact Gaussian elimination over the rational-function field.

use crate::error::{Error, Result};
use crate::expr::ctx::Ctx;
use crate::expr::rat::Rat;

/// Solve A x = B where B has one or more columns; returns x of shape
/// (cols of A) x (cols of B). Fails on a singular system.
pub fn solve_linear(
    a: &[Vec<Rat>],
    b: &[Vec<Rat>],
    ctx: &Ctx,
) -> Result<Vec<Vec<Rat>>> {
    let n = a.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let m = a[0].len();
    if n < m {
        return Err(Error::SingularSystem(format!(
            "{n} equations for {m} unknowns"
        )));
    }
    let ncols = b.first().map(|r| r.len()).unwrap_or(0);
    let mut mat: Vec<Vec<Rat>> = a.to_vec();
    let mut rhs: Vec<Vec<Rat>> = b.to_vec();

    let mut row = 0;
    let mut pivots: Vec<usize> = Vec::new();
    for col in 0..m {
        // choose the structurally simplest nonzero pivot
        let pivot_row = (row..n)
            .filter(|&r| !mat[r][col].is_zero())
            .min_by_key(|&r| mat[r][col].num.terms.len() + mat[r][col].den.terms.len());
        let Some(p) = pivot_row else {
            return Err(Error::SingularSystem(format!("no pivot in column {col}")));
        };
        mat.swap(row, p);
        rhs.swap(row, p);
        let inv = mat[row][col].inverse(ctx)?;
        for c in col..m {
            mat[row][c] = mat[row][c].mul(&inv, ctx)?;
        }
        for c in 0..ncols {
            rhs[row][c] = rhs[row][c].mul(&inv, ctx)?;
        }
        for r in 0..n {
            if r != row && !mat[r][col].is_zero() {
                let f = mat[r][col].clone();
                for c in col..m {
                    let t = f.mul(&mat[row][c], ctx)?;
                    mat[r][c] = mat[r][c].sub(&t, ctx)?;
                }
                for c in 0..ncols {
                    let t = f.mul(&rhs[row][c], ctx)?;
                    rhs[r][c] = rhs[r][c].sub(&t, ctx)?;
                }
            }
        }
        pivots.push(row);
        row += 1;
        if row == n {
            break;
        }
    }
    if pivots.len() < m {
        return Err(Error::SingularSystem("rank deficient".into()));
    }
    // consistency of extra equations
    for r in m..n {
        for c in 0..ncols {
            if !rhs[r][c].is_zero() {
                return Err(Error::SingularSystem(format!(
                    "inconsistent equation {r}"
                )));
            }
        }
    }
    Ok(rhs.into_iter().take(m).collect())
}

/// Determinant by fraction-free-ish elimination over the field.
pub fn determinant(a: &[Vec<Rat>], ctx: &Ctx) -> Result<Rat> {
    let n = a.len();
    let mut m = a.to_vec();
    let mut det = Rat::one();
    for col in 0..n {
        let p = (col..n).find(|&r| !m[r][col].is_zero());
        let Some(p) = p else {
            return Ok(Rat::zero());
        };
        if p != col {
            m.swap(col, p);
            det = det.neg();
        }
        det = det.mul(&m[col][col], ctx)?;
        let inv = m[col][col].inverse(ctx)?;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].mul(&inv, ctx)?;
            for c in col..n {
                let t = f.mul(&m[col][c], ctx)?;
                m[r][c] = m[r][c].sub(&t, ctx)?;
            }
        }
    }
    Ok(det)
}
