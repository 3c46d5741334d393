//! Converts offline batch programs over a list into equivalent online
//! schemes: an initializer plus a one-element-at-a-time update program.
//!
//! The pipeline builds a relational function signature from the offline
//! program, derives the initializer by evaluation on the empty list,
//! decomposes the update program into independent per-hole synthesis tasks,
//! and solves each hole by symbolic implicate finding with a search-based
//! fallback seeded by mined templates.

pub mod decompose;
pub mod driver;
pub mod enumsynth;
pub mod eval;
pub mod ir;
pub mod mine;
pub mod polyinterp;
pub mod rat;
pub mod rfs;
pub mod sym;
