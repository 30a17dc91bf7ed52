//! Space-time unfitted finite element solver for a convection-diffusion
//! problem on a moving 1D domain.
//!
//! The domain is described implicitly by a level set function on a fixed
//! background mesh. Each time slab carries a tensor-product DG-in-time
//! space on the active (cut) elements, stabilized by a direct ghost
//! penalty, with an isoparametric space-time mesh deformation for
//! higher-order geometry. Four method variants (plain upwind, mass
//! conserving, mean-constrained, mean-penalized) share the same slab
//! systems.
//!
//! Besides the solver itself the crate ships the verification machinery:
//! discrete norms, errors against a lifted exact solution, EOC tables,
//! and numerical stability probes (ghost-penalty constants, trace
//! inequality, inf-sup) built on small dense eigenproblems.

pub mod cutgeom;
pub mod discretization;
pub mod error;
pub mod forms;
pub mod lagrange;
pub mod levelset;
pub mod mapping;
pub mod meshtime;
pub mod norms;
pub mod par;
pub mod probes;
pub mod quad1d;
pub mod solver;
pub mod space;
pub mod study;

pub use error::{Error, Result};
