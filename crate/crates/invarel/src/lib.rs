//! invarel: exact invariant Euler-Lagrange equations for curves.
//!
//! Given a finite-dimensional Lie algebra of vector fields acting on a
//! manifold, a transversal cross-section and generating differential
//! invariants, the engine computes the invariant Euler-Lagrange operators
//! `E_inv(L) = A* E(L) - B* H(L)` together with the matrix relative
//! invariant `W` relating them to the classical Euler-Lagrange equations,
//! entirely in exact rational arithmetic over radical towers.

pub mod engine;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod invariant;
pub mod jet;
pub mod ops;
pub mod q;

pub use error::{Error, Result};
