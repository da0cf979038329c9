//! Numerical laboratory for stationary p-harmonic maps from planar domains
//! to the circle, for p close to 2.

pub mod diagnostics;
pub mod energy;
pub mod hodge;
pub mod error;
pub mod lattice;
pub mod minmax;
pub mod solver;
mod spectral;

pub use error::{Error, Result};
