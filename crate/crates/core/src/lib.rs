//! Back-and-forth systems, flat structures and closed-subgroup codes,
//! executed on finite structures.
//!
//! The crate is organised bottom-up:
//!
//! * [`structures`]: vocabularies, finite structures, quantifier-free
//!   diagrams, formulas and the on-disk structure format.
//! * [`backforth`]: truncated sharp back-and-forth systems, their closures and
//!   the largest system `F∞`.
//! * [`flat`]: flattenings, the flat-structure axiom checker, blowups,
//!   generalized projections, the ♭-translation and Hausdorff detection.
//! * [`reconstruct`]: recovering a sharp structure from a flat one, canonical
//!   forms and the canonical homomorphism.
//! * [`groups`]: permutation groups, subgroup codes, `Fix`, conjugacy and
//!   dividing.
//! * [`reductions`]: padded trees, the graph-to-code pipeline and
//!   cross-cutting equivalence relations.
//! * [`corpus`]: the deterministic instance corpus used by the test suites.

pub mod backforth;
pub mod corpus;
pub mod flat;
pub mod groups;
pub mod reconstruct;
pub mod reductions;
pub mod structures;
pub mod tuples;

mod error;

pub use error::{Error, Result};
