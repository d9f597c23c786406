//! The cross-section algorithm: Maurer-Cartan pullbacks, invariantization
//! tables, contact rewriting, the A/B operators, the relative invariant W
//! and the assembled invariant Euler-Lagrange data.

pub mod ab;
pub mod derived;
pub mod explicit;
pub mod frame;
pub mod result;
pub mod rewrite;
pub mod w;

pub use ab::compute_ab;
pub use frame::{solve_maurer_cartan, FrameData};
pub use result::{invariant_euler_lagrange, singular_locus, ELResult};
pub use rewrite::{contact_rewrite, contact_rewrite_on_section, RewriteTable};
pub use w::compute_w;

/// Default jet-order bound; a computation exceeding it is a hard error.
pub const DEFAULT_MAX_ORDER: u32 = 12;

/// Per-computation options.
#[derive(Clone, Debug)]
pub struct Options {
    pub max_jet_order: u32,
    /// Use the on-cross-section route for the rewrite table.
    pub on_section: bool,
}

impl Default for Options {
    fn default() -> Self {
        let max_jet_order = std::env::var("INVAREL_MAX_ORDER")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_MAX_ORDER);
        Options {
            max_jet_order,
            on_section: false,
        }
    }
}

impl Options {
    pub fn with_order(max_jet_order: u32) -> Self {
        Options {
            max_jet_order,
            ..Options::default()
        }
    }

    pub fn on_section(mut self, yes: bool) -> Self {
        self.on_section = yes;
        self
    }
}
