//! Discrete domains and the staggered calculus on them: node fields,
//! edge one-forms, cell densities, winding numbers and vortex detection.

mod calculus;
mod field;
mod grid;
pub mod snapshot;
mod vortex;

pub use calculus::{
    ball_integral, curl, current, div, grad_scalar, phase_diff, plaquette_windings, winding, wrap_angle, MIN_MODULUS,
};
pub use field::{FieldKind, Location, OneForm2D, S1Field, ScalarField, UNIT_TOL};
pub(crate) use field::cmul;
pub use grid::{Grid2D, NodeRole, Topology};
pub use vortex::{boundary_degree, detect_vortices, Contour, Vortex, VortexSet};
