//! Inequality checking: closed-form floors and ceilings for the spectral
//! product and its factors, and reports that confront them with computed
//! values under an explicit discretisation slack.

mod report;
mod rules;

pub use report::{check_all, check_scalars, BoundEntry, BoundReport, PerforatedAux};
pub use rules::{
    cell_eigen_window_highdim, cell_eigen_window_planar, eigen_upper_cell_coupling, eigen_upper_convex,
    product_rate_upper, product_upper_cell_coupling, product_upper_convex, product_upper_sqrt_dimension,
    product_window_by_dimension, slab_product_lower, torsion_upper_cell_coupling, torsion_upper_width,
    PLANAR_CELL_CONSTANT,
};
