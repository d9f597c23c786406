//! Exact arithmetic over multivariate rational functions in a tower of
//! radical extensions. This is the substrate for every other module: jet
//! expressions and abstract invariant expressions are both `Rat` values over
//! a `Ctx` that names the variables.

pub mod ctx;
pub mod gcd;
pub mod parse;
pub mod poly;
pub mod rat;
pub mod series;
pub mod solve;
pub mod zpgcd;

pub use ctx::{Ctx, Side, Var, VarKind, RAD_BASE};
pub use poly::{Mono, Poly};
pub use rat::Rat;
