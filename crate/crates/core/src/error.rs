//! Error type shared by every module.
//!
//! The CLI maps these onto process exit codes, so variants distinguish
//! "the configuration or mesh resolution is wrong" (recoverable by the user)
//! from "a solver failed to converge" (needs investigation).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("dimension mismatch: domain is {expected}-dimensional, point has {got} coordinates")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point lies outside the domain")]
    OutsideDomain,

    #[error("unresolvable feature: {detail}; largest admissible h is {max_h:.6e}")]
    Unresolvable { max_h: f64, detail: String },

    #[error("grid has no interior nodes at this spacing")]
    EmptyInterior,

    #[error("N below regime threshold; smallest admissible N is {min_n}")]
    BelowRegimeThreshold { min_n: u64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("time horizon too short: survival tail holds {} of the integral (limit 5%)", .fraction)]
    TailTooLarge { fraction: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
