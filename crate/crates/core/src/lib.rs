//! Numerical core for corner-singularity analysis of harmonic functions on a
//! rectangular annulus `Ω = λ₀R₁ ∖ R̄₁`.
//!
//! The crate is `no_std` and only needs `alloc`. It provides
//!
//! * [`geometry`]: the annulus, its boundary pieces, per-corner polar frames and
//!   the cutoff functions used to build singular templates,
//! * [`mesh`]: symmetric triangulations graded toward the four reentrant corners,
//! * [`solver`]: P1 finite elements with mixed Dirichlet/Neumann data and a
//!   Jacobi-preconditioned conjugate gradient solver,
//! * [`singular`]: the normalized dual singular function `S̃` and the singular
//!   solution `S` with `ΔS = S̃`,
//! * [`analysis`]: side integrals, the regularity line and corner Fourier fits,
//! * [`levelset`]: contour tracing, zero-set topology and sign regions.
//!
//! File formats, configuration and the command line live in the companion
//! `singlab` crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod levelset;
pub mod mesh;
pub mod quadrature;
pub mod singular;
pub mod solver;
pub mod symmetry;

pub use error::{Error, Result};
pub use geometry::{AnnulusDomain, BoundaryTag, CornerFrame, Cutoff, Point, Side};
pub use mesh::GradedMesh;
pub use singular::SingularFunction;
pub use solver::ScalarField;
