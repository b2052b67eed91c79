//! Iterative solvers for the assembled pair (S, M): preconditioned CG for the
//! torsion problem, inverse power iteration for the principal eigenvalue, and
//! the spectral product with Richardson error control.

mod cg;
mod eigen;
mod spectral;

pub use cg::{solve_spd, CgOutcome};
pub use eigen::{second_pair, smallest_pair, EigenOptions, EigenOutcome};
pub use spectral::{
    assemble_operator, principal_eigenvalue, richardson, solve_torsion, solve_torsion_tol,
    spectral_product, write_field_csv, SpectralResult, TorsionSolution, TORSION_CG_TOL,
};
