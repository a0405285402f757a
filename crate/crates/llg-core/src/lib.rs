//! Finite-difference solver for the Landau-Lifshitz-Gilbert equation
//!
//! ```text
//! m_t = -m x (Lap m) + alpha Lap m + alpha |grad m|^2 m
//! ```
//!
//! on the unit interval or unit cube with homogeneous Neumann boundary
//! conditions and |m| = 1 pointwise. Time stepping is a third-order
//! semi-implicit backward differentiation scheme: each step solves one
//! linear system for an intermediate field m~ and projects it back onto
//! the unit sphere cell by cell.
//!
//! Module map:
//! - [`grid`], [`field`]: cell-centered grids, vector fields with two ghost
//!   layers, even-reflection boundary extension, norms.
//! - [`operators`]: fourth-order Laplacian and gradient stencils.
//! - [`scheme`]: the BDF3 step, extrapolation, assembly, projection.
//! - [`krylov`]: matrix-free restarted GMRES with true-residual
//!   certification, dense assembly for oracles, and the empirical
//!   solvability probe.
//! - [`banded`]: banded LU, the exact preconditioner for 1D step systems.
//! - [`mms`]: manufactured solutions with analytic derivatives and forcing.
//! - [`study`]: convergence studies, order fits, and report emission.

pub mod banded;
pub mod error;
pub mod field;
pub mod grid;
pub mod krylov;
pub mod mms;
pub mod operators;
pub mod scheme;
pub mod study;
pub mod vec3;

pub use error::LlgError;
pub use field::{Norms, ScalarField, VectorField};
pub use grid::Grid;
pub use krylov::{solve, LinearOperator, SolveStats};
pub use scheme::{SchemeParams, SchemeState};
