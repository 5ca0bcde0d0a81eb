//! Exact computations with one-dimensional formal o-modules over
//! equal-characteristic local fields `F_q((t))`.
//!
//! The crate is organized bottom-up:
//!
//! - [`algebra`]: finite fields, precision-tracked Laurent series, `o/ϖ^m`,
//!   Newton polygons.
//! - [`tower`]: towers of local fields given by declared uniformizers,
//!   embeddings, automorphisms, and roots of additive polynomials.
//! - [`formalmod`]: additive-model formal o-modules, torsion and Drinfeld
//!   level structures.
//! - [`lubintate`]: Lubin–Tate towers, the Galois character, torsion
//!   valuations and the determinant character at the CM point.
//! - [`pi0`]: the unit group `(o/ϖ^m)^×`, determinant, reduced norm and the
//!   action on connected components with its character decomposition.
//! - [`report`]: verification records and the suite runner used by the CLI.

pub mod algebra;
pub mod error;
pub mod formalmod;
pub mod lubintate;
pub mod pi0;
pub mod report;
pub mod tower;

pub use error::{Error, Result};
