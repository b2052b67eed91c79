//! Probabilistic oracles independent of the elliptic solvers: a
//! walk-on-spheres estimator of the expected exit time and a heat-semigroup
//! quadrature of the survival probability. Both use the generator-Δ
//! convention, under which the mean exit time from a ball of radius r in m
//! dimensions is r²/(2m).

mod survival;
mod wos;

pub use survival::{survival_torsion, SurvivalEstimate};
pub use wos::{
    default_eps_shell, wos_exit_time, wos_torsion, wos_torsion_threads, WosEstimate, WALK_STEP_CAP,
};
