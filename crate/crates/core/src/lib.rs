//! torsionlab: numerics for the torsion function v (solution of -Δv = 1 with
//! zero boundary values), the principal Dirichlet eigenvalue λ₁, and the
//! scale-invariant product λ₁·‖v‖∞.
//!
//! The crate is organised around one pipeline:
//!
//!   geometry (exact domain descriptions)
//!     → discretize (Shortley-Weller finite differences, symmetric form)
//!     → solvers (CG torsion solve, inverse-power eigenvalue, Richardson)
//!     → bounds (closed-form inequalities the computed fields are checked against)
//!
//! plus two independent estimators in `stochastic` (walk-on-spheres and a
//! heat-semigroup quadrature) used to cross-validate the grid results.
//!
//! Probabilistic normalisation: Brownian motion here has generator Δ, not Δ/2.
//! With that convention the torsion function equals the mean exit time, and the
//! mean exit time of a ball of radius r in m dimensions is r²/(2m).

pub mod bounds;
pub mod discretize;
pub mod error;
pub mod geometry;
pub mod solvers;
pub mod stochastic;

pub use error::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
