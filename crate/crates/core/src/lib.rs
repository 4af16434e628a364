//! Building blocks for solving the Richards equation with a modified inexact
//! Newton method.
//!
//! The crate is `no_std` and only needs an allocator. Layers, bottom up:
//!
//! * [`constitutive`]: Van Genuchten saturation and conductivity curves.
//! * [`grid`]: tensor mesh, unknown numbering, Dirichlet data.
//! * [`residual`]: the backward Euler finite-difference operator.
//! * [`jacobian`]: analytic and finite-difference Jacobians.
//! * [`sparse`] and [`krylov`]: CSR storage, GMRES and PCG.
//! * [`precond`]: ILU(0), additive Schwarz and aggregation AMG.
//! * [`newton`]: time stepping with Jacobian reuse and a line search.
//! * [`spectral`]: symbol sampling and eigenvalue distribution checks.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod constitutive;
pub mod dense;
pub mod grid;
pub mod jacobian;
pub mod krylov;
pub mod newton;
pub mod precond;
pub mod quadrature;
pub mod residual;
pub mod sparse;
pub mod spectral;

pub use constitutive::VanGenuchtenParams;
pub use grid::{BoundaryKind, BoundarySpec, Field, ProblemGrid};
pub use residual::{AverageKind, RichardsProblem};
pub use sparse::SparseMatrix;

/// Crate version, recorded in experiment provenance lines.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
