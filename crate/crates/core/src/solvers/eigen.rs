//! Smallest generalized eigenpair of S phi = lambda M phi by inverse power
//! iteration with CG inner solves.
//!
//! The outer iteration is the plain zero-shift one on pure-Dirichlet
//! operators. Operators whose row sums all vanish (pure Neumann, singular S)
//! get a fixed positive shift sigma so the inner solves see S + sigma*M; the
//! reported eigenvalue is always the Rayleigh quotient of S itself, so the
//! shift never leaks into results. Inner solves start from the fixed-point
//! guess x/(lambda+sigma) and run at a tolerance tied to the current outer
//! progress, with one full-precision polish pass after the eigenvalue settles.

use crate::discretize::{dot, SparseOperator};
use crate::{Error, Result};

use super::cg::solve_spd;

#[derive(Clone, Copy, Debug)]
pub struct EigenOptions {
    /// Relative eigenvalue change at which the outer iteration stops.
    pub tol: f64,
    pub max_outer: usize,
    /// Inner CG tolerance used for the polish pass (and as the schedule floor).
    pub cg_tol_floor: f64,
    pub max_inner: usize,
    /// None = decide from the operator's row sums (zero shift when definite).
    pub shift: Option<f64>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            // Elongated domains have gap ratios like 1.0075, which means
            // thousands of cheap outer steps rather than dozens; the cap has
            // to accommodate that.
            tol: 1e-9,
            max_outer: 6000,
            cg_tol_floor: 1e-12,
            max_inner: 400_000,
            shift: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenOutcome {
    pub value: f64,
    /// M-normalized, sign-fixed so the dominant mass is positive.
    pub vector: Vec<f64>,
    pub outer_iterations: usize,
    /// Total CG iterations across all inner solves.
    pub inner_iterations: usize,
    /// ||S phi - lambda M phi||_2 / ||phi||_2, unscaled.
    pub residual: f64,
    /// Convergence-ratio warning: the change ratio stayed above 0.97 for five
    /// consecutive outer steps, the signature of a near-degenerate lowest pair.
    pub slow: bool,
    pub last_ratio: f64,
}

/// Smallest eigenpair of (S, M).
pub fn smallest_pair(op: &SparseOperator, opts: &EigenOptions) -> Result<EigenOutcome> {
    iterate(op, opts, None)
}

/// Smallest eigenpair M-orthogonal to `phi1` (the second eigenvalue when
/// `phi1` is the ground state).
pub fn second_pair(op: &SparseOperator, phi1: &[f64], opts: &EigenOptions) -> Result<EigenOutcome> {
    let scale = m_norm(op, phi1);
    if scale == 0.0 {
        return Err(Error::InvalidConfig("deflation vector is zero".into()));
    }
    let unit: Vec<f64> = phi1.iter().map(|v| v / scale).collect();
    iterate(op, opts, Some(&unit))
}

fn m_norm(op: &SparseOperator, x: &[f64]) -> f64 {
    let mut mx = vec![0.0; x.len()];
    op.mass_apply(x, &mut mx);
    dot(x, &mx).sqrt()
}

/// Decide the shift: zero for operators with Dirichlet leakage (definite),
/// half the lowest box mode for kernel-bearing pure-Neumann ones.
fn auto_shift(op: &SparseOperator) -> f64 {
    let n = op.n_slots();
    let ones: Vec<f64> = op.grid.live.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
    let mut y = vec![0.0; n];
    op.apply(&ones, &mut y);
    let leak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if leak > 1e-8 * op.uniform_diag {
        return 0.0;
    }
    let mut span: f64 = 0.0;
    for a in 0..op.grid.m {
        span = span.max(op.grid.h[a] * (op.grid.dims[a] as f64 - 1.0));
    }
    0.5 * std::f64::consts::PI.powi(2) / (span * span)
}

fn iterate(op: &SparseOperator, opts: &EigenOptions, deflate: Option<&[f64]>) -> Result<EigenOutcome> {
    let n = op.n_slots();
    let sigma = opts.shift.unwrap_or_else(|| auto_shift(op));

    let mut inv_diag = op.diagonal();
    if sigma != 0.0 {
        for (i, d) in inv_diag.iter_mut().enumerate() {
            *d += sigma * op.mass_of(i);
        }
    }
    for d in inv_diag.iter_mut() {
        *d = 1.0 / *d;
    }
    let shifted = |x: &[f64], y: &mut [f64]| {
        op.apply(x, y);
        if sigma != 0.0 {
            for i in 0..x.len() {
                y[i] += sigma * x[i];
            }
            for &(slot, w) in op.mass_entries() {
                y[slot as usize] += sigma * (w - 1.0) * x[slot as usize];
            }
        }
    };

    // Start vector: the constant on live slots (guaranteed overlap with the
    // positive ground state); a fixed pseudo-random one in deflated mode,
    // where the constant may be exactly the vector we project out.
    let mut x = vec![0.0f64; n];
    if deflate.is_some() {
        let mut state = 0x9e3779b97f4a7c15u64;
        for (slot, v) in x.iter_mut().enumerate() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            if op.grid.live[slot] {
                *v = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            }
        }
    } else {
        for (slot, v) in x.iter_mut().enumerate() {
            if op.grid.live[slot] {
                *v = 1.0;
            }
        }
    }

    let mut work = vec![0.0f64; n];
    let mut b = vec![0.0f64; n];
    let mut y = vec![0.0f64; n];

    let project = |x: &mut [f64], work: &mut [f64]| {
        if let Some(phi) = deflate {
            op.mass_apply(x, work);
            let c = dot(phi, work);
            for i in 0..x.len() {
                x[i] -= c * phi[i];
            }
        }
    };

    project(&mut x, &mut work);
    let norm = m_norm(op, &x);
    if norm == 0.0 {
        return Err(Error::InvalidConfig("start vector vanished after deflation".into()));
    }
    x.iter_mut().for_each(|v| *v /= norm);

    op.apply(&x, &mut work);
    let mut lambda = dot(&x, &work);
    let mut rel_change = f64::INFINITY;
    let mut last_ratio = 0.0f64;
    let mut high_streak = 0usize;
    let mut slow = false;
    let mut inner_total = 0usize;
    let mut inner_tol = 1e-5f64.max(opts.cg_tol_floor);
    let mut floor_mode = false;
    let res_target = 1e-10 * op.uniform_diag;

    for outer in 1..=opts.max_outer {
        op.mass_apply(&x, &mut b);
        // Fixed-point warm start: the exact solve returns x/(lambda+sigma).
        let guess_scale = if lambda + sigma > 0.0 { 1.0 / (lambda + sigma) } else { 1.0 };
        for i in 0..n {
            y[i] = x[i] * guess_scale;
        }
        let stats = solve_spd(shifted, &inv_diag, &b, &mut y, inner_tol, opts.max_inner)?;
        inner_total += stats.iterations;

        project(&mut y, &mut work);
        let norm = m_norm(op, &y);
        if norm == 0.0 {
            return Err(Error::NonConvergence {
                what: "inverse power iteration (iterate collapsed)".into(),
                iterations: outer,
                residual: rel_change,
            });
        }
        for i in 0..n {
            x[i] = y[i] / norm;
        }

        op.apply(&x, &mut work);
        let next = dot(&x, &work);
        // Residual ||S x - lambda M x||; work holds S x, b is reused for M x.
        op.mass_apply(&x, &mut b);
        let mut res2 = 0.0f64;
        for i in 0..n {
            let r = work[i] - next * b[i];
            res2 += r * r;
        }
        let x_norm = dot(&x, &x).sqrt();
        let residual = res2.sqrt() / x_norm;

        let change = (next - lambda).abs();
        let denom = next.abs().max(sigma * 1e-6).max(f64::MIN_POSITIVE);
        let prev_rel = rel_change;
        rel_change = change / denom;
        lambda = next;

        if prev_rel.is_finite() && prev_rel > 0.0 {
            last_ratio = rel_change / prev_rel;
            if last_ratio > 0.97 && rel_change > opts.tol {
                high_streak += 1;
                if high_streak >= 5 {
                    slow = true;
                }
            } else {
                high_streak = 0;
            }
        }

        let settled = rel_change <= opts.tol || residual <= res_target;
        if settled && floor_mode {
            return Ok(finish(x, lambda, outer, inner_total, residual, slow, last_ratio, deflate.is_none()));
        }
        if settled {
            floor_mode = true;
            inner_tol = opts.cg_tol_floor;
        } else if !floor_mode {
            // Inexact inverse iteration keeps its outer rate as long as the
            // inner residual stays a fixed fraction of the eigenresidual, so
            // the schedule follows the residual (one scale of e_k), not the
            // eigenvalue change (which is e_k^2 and would make slow-gap
            // domains solve far tighter than the outer progress can use).
            let scale = lambda.abs() + sigma + f64::MIN_POSITIVE;
            inner_tol = (0.05 * residual / scale).clamp(opts.cg_tol_floor, 1e-4);
        }
    }

    Err(Error::NonConvergence {
        what: "inverse power iteration".into(),
        iterations: opts.max_outer,
        residual: rel_change,
    })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    mut x: Vec<f64>,
    lambda: f64,
    outer: usize,
    inner: usize,
    residual: f64,
    slow: bool,
    last_ratio: f64,
    sign_fix: bool,
) -> EigenOutcome {
    if sign_fix {
        let total: f64 = x.iter().sum();
        if total < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
    }
    EigenOutcome {
        value: lambda,
        vector: x,
        outer_iterations: outer,
        inner_iterations: inner,
        residual,
        slow,
        last_ratio,
    }
}
