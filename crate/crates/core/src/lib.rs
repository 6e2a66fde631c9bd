//! Loewner evolutions in multiply connected slit domains: the Green-function vector field,
//! chordal and bilateral Loewner flows, the motion of moduli and SLE-type driving diffusions.

pub mod domain;
pub mod error;
pub mod field;
pub mod fixtures;
pub mod loewner;
pub mod moduli_flow;
pub mod rng;
pub mod sle;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
