//! Combinatorial invariants of fantastacks over toric varieties.

pub mod arcs;
pub mod cli;
pub mod cone;
pub mod error;
pub mod jets;
pub mod lattice;
pub mod measures;
pub mod motivic;
pub mod stacky_fan;

pub use error::{Error, Result};
