//! The component group `π_0 = (o/t^m)^×`, the maps `det`, `Nrd` and `χ`
//! through which `GL_n(o) × o_B^× × Gal` acts on it, and the characters
//! indexing the summands of `H^0`.

mod action;
mod division;
mod group;
mod matrix;

pub use action::{h0_decomposition, pi0_action_table, pi0_action_table_on, ActionChecks, ActionRow, Factor, H0Decomposition, H0Summand, Pi0Action, RANDOM_PAIRS};
pub use division::{DivisionAlgebraOrder, OrderElem};
pub use group::{Character, UnitGroup};
pub use matrix::{det, determinant, diagonal, elementary, gl_generators, identity, mat_mul, random_gl, random_matrix, random_sl, Matrix};

/// `(o/t^m)^×` with its invariant-factor decomposition.
pub fn unit_group(q: u32, m: usize) -> crate::Result<UnitGroup> {
    UnitGroup::new(q, m)
}
