//! Reduced-order models for wave problems on parametrically deformed cubes.
//!
//! The crate solves Helmholtz (P1 Lagrange) and Maxwell (lowest-order edge
//! elements) problems on a fixed reference mesh, builds centered POD bases
//! from quasi-Monte-Carlo snapshots, and evaluates two online surrogates: a
//! Galerkin projection onto the basis and a tanh network that predicts the
//! reduced coefficients directly.

pub mod error;
pub mod fem;
pub mod harness;
pub mod helmholtz;
pub mod maxwell;
pub mod pod;
pub mod rom;
pub mod sampling;
pub mod surrogate;
pub mod transform;

pub use error::{Error, ErrorKind, Result};
