//! Finite-difference discretization.
//!
//! `grid` turns an exact domain description into a node-centred lattice with
//! per-node boundary crossing fractions (the Shortley-Weller thetas), and
//! `assemble` turns that lattice into a symmetric positive definite operator
//! pair (S, M): S is the weighted five/seven-point stiffness matrix, M the
//! diagonal of finite-volume cell weights. Solvers work with the generalized
//! problem S v = M f and S phi = lambda M phi; away from boundaries M is the
//! identity and S the classical stencil, so closed-form box spectra hold
//! exactly.

mod assemble;
mod grid;
mod operator;

pub use assemble::{assemble_dirichlet, assemble_perforated_quadrant, assemble_unit_cell};
pub use grid::{build_grid, FaceBc, GridDomain};
pub use operator::{dot, BoundaryKind, SparseOperator};
