//! Metric regularity at infinity for set-valued mappings with polyhedral graphs.
//!
//! The crate is organized bottom-up:
//!
//! - [`geom`]: polyhedra, polyhedral cones, exact projections and min-norm problems.
//! - [`svmap`]: set-valued mappings given by their graphs, slicing and the Jelonek set.
//! - [`normals`]: regular and limiting normal cones, coderivatives, and their
//!   versions at infinity.
//! - [`regmod`]: the regularity modulus at infinity, `rg⁺`, upper norms and the
//!   criterion/radius checks.
//! - [`perturb`]: the rank-one destabilizing perturbation and its verification.
//! - [`lgsolve`]: the fixed-point iteration for perturbed generalized equations.
//!
//! All Euclidean. All values are immutable after construction.

pub mod error;
pub mod fixtures;
pub mod geom;
pub mod lgsolve;
pub mod linalg;
pub mod normals;
pub mod perturb;
pub mod regmod;
pub mod sampling;
pub mod svmap;
pub mod tol;

pub use error::{Error, Result};
pub use geom::{ConeUnion, PolyCone, Polyhedron, UnionRegion};
pub use svmap::{InfinityWindow, PerturbedMap, SampledMap, SetValuedMap};

