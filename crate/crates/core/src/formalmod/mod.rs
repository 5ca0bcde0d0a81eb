//! Additive-model formal o-modules: the `[t]`-polynomial and its `[a]`
//! iterates, heights, torsion points and Drinfeld level structures.

pub(crate) mod additive;
mod level;
mod module;
mod torsion;

pub use additive::{AdditivePolynomial, DEGREE_CAP};
pub use level::{count_level_structures, gl_order, kernel_rank, KernelReport, LevelCount, LevelReport, LevelStructure, ENUMERATION_CAP};
pub use module::{FormalOModule, Specialization};
pub(crate) use torsion::point_key;
pub use torsion::{torsion_points, StructureReport, TorsionModule};
