//! Closed-form floors and ceilings for the product lambda * sup v and its
//! factors. Everything here is plain arithmetic on geometry data: no grids, no
//! solves. The checker in `report` pairs these with computed spectra; keeping
//! the two apart means the numbers being judged never leak into the judge.
//!
//! Rules that quote a unit-cell eigenvalue mu1 describe the cube of side L
//! with N^m ball holes; mu1 is the first eigenvalue of the single subcube
//! (side L/N) with Neumann outer walls and a Dirichlet ball of radius delta at
//! the centre. Those rules come as (value, valid) pairs: the value is always
//! the stated formula, the flag tells whether the regime assumptions behind it
//! hold, and the caller decides what an out-of-regime value is worth.

use std::f64::consts::{E, LN_2, PI};

use crate::geometry::newtonian_capacity_coef;

/// Dimensional window for the product: the lower constant 1 (sharp, no domain
/// can beat it) and the upper coefficient 4 + 3 m log 2.
pub fn product_window_by_dimension(m: usize) -> (f64, f64) {
    debug_assert!(m >= 2);
    (1.0, 4.0 + 3.0 * m as f64 * LN_2)
}

/// Sharper dimensional ceiling (m + c sqrt(m) + 8)/8 with c = sqrt(5(4 + log 2)).
/// Beats the window coefficient everywhere we use it (m up to 10 and beyond).
pub fn product_upper_sqrt_dimension(m: usize) -> f64 {
    debug_assert!(m >= 2);
    let c = (5.0 * (4.0 + LN_2)).sqrt();
    let mf = m as f64;
    (mf + c * mf.sqrt() + 8.0) / 8.0
}

/// Product floor pi^2/8 for convex sets, any dimension; the slab attains it.
pub fn slab_product_lower() -> f64 {
    PI * PI / 8.0
}

/// Product ceiling for planar convex sets in terms of width over diameter;
/// collapses to the slab floor as the set elongates.
pub fn product_upper_convex(width: f64, diameter: f64) -> f64 {
    debug_assert!(width > 0.0 && width <= diameter * (1.0 + 1e-12));
    let x = (width / diameter).powf(2.0 / 3.0);
    slab_product_lower() * (1.0 + 7.0 * 3f64.powf(2.0 / 3.0) * x)
}

/// Eigenvalue ceilings for a planar convex set from its width and the longest
/// chord orthogonal to the width direction: the cubed form from the inscribed
/// rectangle and its linear relaxation via (1+x)^3 <= 1+7x on (0,1]. The cubed
/// form is never larger.
pub fn eigen_upper_convex(width: f64, chord: f64) -> (f64, f64) {
    debug_assert!(width > 0.0 && width <= chord * (1.0 + 1e-12));
    let x = (width / chord).powf(2.0 / 3.0);
    let scale = PI * PI / (width * width);
    (scale * (1.0 + x).powi(3), scale * (1.0 + 7.0 * x))
}

/// Torsion ceiling w^2/8: the slab of the same width dominates by monotonicity
/// and its profile maxes at w^2/8 exactly.
pub fn torsion_upper_width(width: f64) -> f64 {
    debug_assert!(width > 0.0);
    width * width / 8.0
}

/// Eigenvalue ceiling for the perforated cube: mu1 plus the surcharge
/// 32 m (5/4)^m (N/L^2 + mu1 / sqrt(N)) paid for cutting the periodised cell
/// eigenfunction down to the outer Dirichlet walls. The surcharge estimate
/// needs N >= 10, holes within L/(4N), and mu1 at least N/L^2.
pub fn eigen_upper_cell_coupling(mu1: f64, m: usize, n: usize, side: f64, delta: f64) -> (f64, bool) {
    let nf = n as f64;
    let coef = 32.0 * m as f64 * 1.25f64.powi(m as i32);
    let rhs = mu1 + coef * (nf / (side * side) + mu1 / nf.sqrt());
    let valid = n >= 10 && nf / (side * side) <= mu1 && delta <= side / (4.0 * nf);
    (rhs, valid)
}

/// Torsion ceiling for the perforated cube: the cell torsion with Neumann
/// walls, expanded in cell eigenfunctions, gives 1/mu1 plus a crossing term
/// sqrt(2m) L / (sqrt(mu1) N) plus the (4/3)^m (L/N)^2 tail. Holds while mu1
/// stays below 3 e N^2 / (16 m L^2).
pub fn torsion_upper_cell_coupling(mu1: f64, m: usize, n: usize, side: f64) -> (f64, bool) {
    let nf = n as f64;
    let mf = m as f64;
    let rhs = 1.0 / mu1
        + (2.0 * mf).sqrt() * side / (mu1.sqrt() * nf)
        + (4.0f64 / 3.0).powi(m as i32) * side * side / (nf * nf);
    let valid = mu1 <= 3.0 * E * nf * nf / (16.0 * mf * side * side);
    (rhs, valid)
}

/// Product ceiling for the perforated cube: the two cell-coupling ceilings
/// multiplied, valid exactly when both factors are. Along the critical hole
/// schedule this tends to 1, which is what makes the family interesting.
pub fn product_upper_cell_coupling(mu1: f64, m: usize, n: usize, side: f64, delta: f64) -> (f64, bool) {
    let (eig, eig_ok) = eigen_upper_cell_coupling(mu1, m, n, side, delta);
    let (tor, tor_ok) = torsion_upper_cell_coupling(mu1, m, n, side);
    (eig * tor, eig_ok && tor_ok)
}

/// Enclosing constant of the planar cell window: max{100, 8 pi / (4 - pi)},
/// and the 8 pi / (4 - pi) branch is below 30, so the max is 100.
pub const PLANAR_CELL_CONSTANT: f64 = 100.0;

/// Two-sided window for the planar unit-cell eigenvalue when the hole is
/// small, delta < L/(6N): both sides are N^2/L^2 over log(L/(2 delta N)), the
/// lower scaled by 1/100 and the upper by 8 pi/(4 - pi).
pub fn cell_eigen_window_planar(delta: f64, n: usize, side: f64) -> (f64, f64, bool) {
    let nf = n as f64;
    let base = nf * nf / (side * side) / (side / (2.0 * delta * nf)).ln();
    let lo = base / 100.0;
    let hi = base * 8.0 * PI / (4.0 - PI);
    (lo, hi, delta < side / (6.0 * nf))
}

/// Two-sided window for the unit-cell eigenvalue in m >= 3: the capacity-type
/// value (N/L)^m delta^(m-2) enclosed within a caller-chosen factor c (only
/// the existence of some c >= 1 is proven, no value). The window is valid
/// while the hole capacity is small next to the cell size:
/// kappa_m delta^(m-2) <= (L/N)^(m-2) / 16.
pub fn cell_eigen_window_highdim(delta: f64, n: usize, side: f64, m: usize, c: f64) -> (f64, f64, bool) {
    debug_assert!(m >= 3, "planar cells follow the log window instead");
    debug_assert!(c >= 1.0);
    let nf = n as f64;
    let center = (nf / side).powi(m as i32) * delta.powi(m as i32 - 2);
    let cap = newtonian_capacity_coef(m) * delta.powi(m as i32 - 2);
    let valid = cap <= (side / nf).powi(m as i32 - 2) / 16.0;
    (center / c, center * c, valid)
}

/// Product decay ceiling along the critical schedule: 1 + 2 c N^(-1/3). The
/// prefactor c is empirical (no closed form exists), so the caller supplies it
/// and any report using this records the value.
pub fn product_rate_upper(n: usize, rate_constant: f64) -> f64 {
    debug_assert!(rate_constant > 0.0);
    1.0 + 2.0 * rate_constant * (n as f64).powf(-1.0 / 3.0)
}
