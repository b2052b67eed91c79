//! The critical hole-radius schedule for the perforated cube.
//!
//! Shrinking N^m holes at rate delta*(N) keeps the principal eigenvalue of the
//! periodic cell growing like N^alpha while the removed volume vanishes, which
//! is the regime in which the spectral product of the perforated cube climbs
//! toward its upper range. The schedule changes form at m = 3 because the
//! point capacity of a ball does: logarithmic in the plane, power-law above.
//!
//!   m = 2 : delta* = (L / 2N) exp(-N^(2 - alpha)),  valid once delta* < L/(6N)
//!   m >= 3: delta* = L N^((alpha - m)/(m - 2)),     valid once the capacity
//!           smallness condition kappa_m delta^(m-2) <= (L/N)^(m-2) / 16 holds
//!           and the ball stays inside its subcube.
//!
//! Both validity predicates are monotone in N, so each has a smallest
//! admissible N, reported when a caller asks for a radius below threshold.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HoleSchedule {
    pub radius: f64,
    /// Whether N is inside the regime where the schedule's guarantees hold.
    pub valid: bool,
    /// Smallest N for which `valid` would be true at these (m, alpha).
    pub min_valid_n: u64,
}

impl HoleSchedule {
    /// The radius, or the regime error naming the smallest admissible N.
    pub fn require_valid(&self) -> Result<f64> {
        if self.valid {
            Ok(self.radius)
        } else {
            Err(Error::BelowRegimeThreshold { min_n: self.min_valid_n })
        }
    }
}

/// Newtonian capacity normalisation constant (m - 2) 2 pi^(m/2) / Gamma(m/2),
/// the factor turning radius^(m-2) into the capacity of a ball for m >= 3.
pub fn newtonian_capacity_coef(m: usize) -> f64 {
    debug_assert!(m >= 3, "capacity constant is a power-law notion, m >= 3");
    (m as f64 - 2.0) * 2.0 * std::f64::consts::PI.powf(m as f64 / 2.0) / gamma_half(m)
}

// Gamma(m/2) for integer m >= 1, exact by the recurrence from Gamma(1) and
// Gamma(1/2) = sqrt(pi).
fn gamma_half(m: usize) -> f64 {
    let mut x = if m % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut k = if m % 2 == 0 { 2 } else { 1 };
    while k + 2 <= m {
        x *= k as f64 / 2.0;
        k += 2;
    }
    x
}

/// Hole radius of the critical schedule at (m, alpha, N, L), with the regime
/// validity flag and the smallest N that enters the regime.
pub fn critical_hole_radius(m: usize, alpha: f64, n: usize, side: f64) -> Result<HoleSchedule> {
    if m < 2 {
        return Err(Error::InvalidDomain("schedule needs m >= 2".into()));
    }
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::InvalidDomain(format!(
            "growth exponent alpha must lie strictly inside (1, 2), got {alpha}"
        )));
    }
    if n == 0 || !(side > 0.0) || !side.is_finite() {
        return Err(Error::InvalidDomain("need n >= 1 and a positive finite side".into()));
    }

    let nf = n as f64;
    let radius = if m == 2 {
        side / (2.0 * nf) * (-nf.powf(2.0 - alpha)).exp()
    } else {
        side * nf.powf((alpha - m as f64) / (m as f64 - 2.0))
    };

    // One validity predicate shared by the flag and the smallest-N search.
    // m = 2: delta* < L/(6N) reduces to N^(2-alpha) > ln 3.
    // m >= 3: capacity smallness reduces to N^(2-alpha) >= 16 kappa_m, and the
    // ball must also stay strictly inside its subcube (the binding constraint
    // in high dimension).
    let is_valid = |nn: f64| -> bool {
        if m == 2 {
            nn.powf(2.0 - alpha) > 3f64.ln()
        } else {
            let kappa = newtonian_capacity_coef(m);
            let cap_ok = nn.powf(2.0 - alpha) >= 16.0 * kappa;
            let r = side * nn.powf((alpha - m as f64) / (m as f64 - 2.0));
            cap_ok && r < side / (2.0 * nn)
        }
    };

    let valid = is_valid(nf);
    let min_valid_n = smallest_valid_n(&is_valid, m, alpha);
    Ok(HoleSchedule { radius, valid, min_valid_n })
}

// Both predicates are monotone increasing in N, so bracket the threshold from
// a closed-form estimate and fix it up by direct checks.
fn smallest_valid_n(is_valid: &dyn Fn(f64) -> bool, m: usize, alpha: f64) -> u64 {
    let guess = if m == 2 {
        3f64.ln().powf(1.0 / (2.0 - alpha))
    } else {
        let kappa = newtonian_capacity_coef(m);
        let cap = (16.0 * kappa).powf(1.0 / (2.0 - alpha));
        // Fit condition 2 N^((alpha-2)/(m-2) + 1) ... reduces to
        // N^(2-alpha) > 2^(m-2), i.e. N > 2^((m-2)/(2-alpha)).
        let fit = 2f64.powf((m as f64 - 2.0) / (2.0 - alpha));
        cap.max(fit)
    };
    if !guess.is_finite() || guess > 1e15 {
        return u64::MAX;
    }
    let mut n = (guess.floor() as u64).saturating_sub(2).max(1);
    while !is_valid(n as f64) {
        n += 1;
    }
    n
}
