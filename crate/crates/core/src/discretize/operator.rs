//! Storage and kernels for the assembled operator pair (S, M).
//!
//! S is symmetric positive (semi)definite with the classical 2m+1-point
//! stencil on the vast majority of rows; those "bulk" rows are stored as
//! run-length intervals and applied with pure index arithmetic over the full
//! lattice (dead slots hold zeros), which is what makes million-node CG
//! iterations cheap on one core. The few boundary-touched rows live in a
//! small CSR block. M is diagonal, identity except on boundary-touched rows,
//! stored sparsely.

use std::io::Write;
use std::sync::Arc;

use crate::{Error, Result};

use super::grid::GridDomain;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    /// All unknowns vanish on the domain boundary.
    PureDirichlet,
    /// Neumann outer faces (unit cell or symmetry quadrant) with Dirichlet holes.
    Mixed,
}

pub struct SparseOperator {
    pub grid: Arc<GridDomain>,
    pub bc: BoundaryKind,
    /// Diagonal value of every bulk row: sum over axes of 2/h_a².
    pub uniform_diag: f64,
    /// Off-diagonal magnitude per axis for bulk rows: 1/h_a².
    pub uniform_off: Vec<f64>,
    pub(super) runs: Vec<(u32, u32)>,
    pub(super) side_rows: Vec<u32>,
    pub(super) side_diag: Vec<f64>,
    pub(super) side_ptr: Vec<u32>,
    pub(super) side_cols: Vec<u32>,
    pub(super) side_vals: Vec<f64>,
    /// Finite-volume weights where they differ from 1, sorted by slot.
    pub(super) mass: Vec<(u32, f64)>,
    pub(super) bulk_count: usize,
}

impl SparseOperator {
    pub fn n_slots(&self) -> usize {
        self.grid.n_slots()
    }

    pub fn live_count(&self) -> usize {
        self.grid.live_count
    }

    pub fn bulk_row_count(&self) -> usize {
        self.bulk_count
    }

    pub fn side_row_count(&self) -> usize {
        self.side_rows.len()
    }

    /// y = S x. Both vectors span all lattice slots; entries at dead slots are
    /// required to be zero on input and stay zero on output.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_slots());
        debug_assert_eq!(y.len(), self.n_slots());
        y.fill(0.0);
        let d0 = self.uniform_diag;
        match self.grid.m {
            2 => {
                let s0 = self.grid.strides[0];
                let (o0, o1) = (self.uniform_off[0], self.uniform_off[1]);
                for &(start, len) in &self.runs {
                    let (start, len) = (start as usize, len as usize);
                    for i in start..start + len {
                        y[i] = d0 * x[i]
                            - o0 * (x[i - s0] + x[i + s0])
                            - o1 * (x[i - 1] + x[i + 1]);
                    }
                }
            }
            3 => {
                let (s0, s1) = (self.grid.strides[0], self.grid.strides[1]);
                let (o0, o1, o2) = (self.uniform_off[0], self.uniform_off[1], self.uniform_off[2]);
                for &(start, len) in &self.runs {
                    let (start, len) = (start as usize, len as usize);
                    for i in start..start + len {
                        y[i] = d0 * x[i]
                            - o0 * (x[i - s0] + x[i + s0])
                            - o1 * (x[i - s1] + x[i + s1])
                            - o2 * (x[i - 1] + x[i + 1]);
                    }
                }
            }
            _ => {
                for &(start, len) in &self.runs {
                    let (start, len) = (start as usize, len as usize);
                    for i in start..start + len {
                        let mut acc = d0 * x[i];
                        for a in 0..self.grid.m {
                            let s = self.grid.strides[a];
                            acc -= self.uniform_off[a] * (x[i - s] + x[i + s]);
                        }
                        y[i] = acc;
                    }
                }
            }
        }
        for (k, &row) in self.side_rows.iter().enumerate() {
            let mut acc = self.side_diag[k] * x[row as usize];
            for e in self.side_ptr[k] as usize..self.side_ptr[k + 1] as usize {
                acc += self.side_vals[e] * x[self.side_cols[e] as usize];
            }
            y[row as usize] = acc;
        }
    }

    /// y = M x (diagonal cell-weight scaling).
    pub fn mass_apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
        for &(slot, w) in &self.mass {
            y[slot as usize] = w * x[slot as usize];
        }
    }

    pub fn mass_of(&self, slot: usize) -> f64 {
        match self.mass.binary_search_by_key(&(slot as u32), |e| e.0) {
            Ok(k) => self.mass[k].1,
            Err(_) => 1.0,
        }
    }

    /// Slots whose cell weight differs from 1, with the weight.
    pub fn mass_entries(&self) -> &[(u32, f64)] {
        &self.mass
    }

    /// Full diagonal of S over lattice slots (dead slots get 1 so the Jacobi
    /// inverse stays finite; vectors are zero there anyway).
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![1.0; self.n_slots()];
        for &(start, len) in &self.runs {
            for i in start as usize..(start + len) as usize {
                d[i] = self.uniform_diag;
            }
        }
        for (k, &row) in self.side_rows.iter().enumerate() {
            d[row as usize] = self.side_diag[k];
        }
        d
    }

    /// All stored entries of row `slot` as (column slot, value), diagonal
    /// included. Empty for dead slots.
    pub fn row_entries(&self, slot: usize) -> Vec<(usize, f64)> {
        if !self.grid.live[slot] {
            return Vec::new();
        }
        if let Ok(k) = self.side_rows.binary_search(&(slot as u32)) {
            let mut out = vec![(slot, self.side_diag[k])];
            for e in self.side_ptr[k] as usize..self.side_ptr[k + 1] as usize {
                out.push((self.side_cols[e] as usize, self.side_vals[e]));
            }
            out.sort_by_key(|e| e.0);
            return out;
        }
        let mut out = vec![(slot, self.uniform_diag)];
        for a in 0..self.grid.m {
            let s = self.grid.strides[a];
            for n in [slot.wrapping_sub(s), slot + s] {
                if n < self.n_slots() && self.grid.live[n] {
                    out.push((n, -self.uniform_off[a]));
                }
            }
        }
        out.sort_by_key(|e| e.0);
        out
    }

    /// Largest |S_pq - S_qp| over all stored pairs, in units of the uniform
    /// diagonal. Symmetry is structural here, so this should be exactly zero;
    /// the invariant tests call it to prove that.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in 0..self.n_slots() {
            if !self.grid.live[p] {
                continue;
            }
            for (q, v) in self.row_entries(p) {
                if q == p {
                    continue;
                }
                let back = self
                    .row_entries(q)
                    .into_iter()
                    .find(|(c, _)| *c == p)
                    .map(|(_, v)| v)
                    .unwrap_or(0.0);
                worst = worst.max((v - back).abs());
            }
        }
        worst / self.uniform_diag
    }

    /// Row sums S·1 restricted to live slots (the "leakage" vector: zero deep
    /// inside, strictly positive where the stencil touches the boundary).
    pub fn row_sums(&self) -> Vec<(usize, f64)> {
        let ones: Vec<f64> = self.grid.live.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        let mut y = vec![0.0; self.n_slots()];
        self.apply(&ones, &mut y);
        (0..self.n_slots())
            .filter(|&s| self.grid.live[s])
            .map(|s| (s, y[s]))
            .collect()
    }

    /// Smallest Ritz value of a k-step Lanczos probe on S, the cheap positive
    /// definiteness check. Deterministic start vector.
    pub fn lanczos_smallest_ritz(&self, steps: usize) -> f64 {
        let n = self.n_slots();
        let mut v = vec![0.0f64; n];
        let mut state = 0x2545f4914f6cdd1du64;
        for (slot, val) in v.iter_mut().enumerate() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            if self.grid.live[slot] {
                *val = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            }
        }
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);

        let mut v_prev = vec![0.0f64; n];
        let mut w = vec![0.0f64; n];
        let mut alphas = Vec::with_capacity(steps);
        let mut betas: Vec<f64> = Vec::with_capacity(steps);
        let mut beta = 0.0f64;
        for _ in 0..steps {
            self.apply(&v, &mut w);
            let alpha = dot(&w, &v);
            alphas.push(alpha);
            for i in 0..n {
                w[i] -= alpha * v[i] + beta * v_prev[i];
            }
            beta = dot(&w, &w).sqrt();
            if beta < 1e-300 {
                break;
            }
            betas.push(beta);
            std::mem::swap(&mut v_prev, &mut v);
            for i in 0..n {
                v[i] = w[i] / beta;
            }
        }
        smallest_tridiag_eig(&alphas, &betas)
    }

    /// Matrix Market export of S ("coordinate real symmetric", lower
    /// triangle), rows numbered over live slots in ascending slot order.
    /// Streams without materialising a CSR copy.
    pub fn write_matrix_market<W: Write>(&self, w: &mut W) -> Result<()> {
        let n = self.n_slots();
        let mut live_index = vec![0u32; n];
        let mut count = 0u32;
        for slot in 0..n {
            if self.grid.live[slot] {
                live_index[slot] = count;
                count += 1;
            }
        }
        let mut nnz = 0usize;
        for slot in 0..n {
            if self.grid.live[slot] {
                nnz += self.row_entries(slot).iter().filter(|(c, _)| *c <= slot).count();
            }
        }
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "% weighted Shortley-Weller stiffness matrix S; see mass vector for M")?;
        writeln!(w, "{count} {count} {nnz}")?;
        for slot in 0..n {
            if !self.grid.live[slot] {
                continue;
            }
            for (c, v) in self.row_entries(slot) {
                if c <= slot {
                    writeln!(w, "{} {} {:.16e}", live_index[slot] + 1, live_index[c] + 1, v)?;
                }
            }
        }
        Ok(())
    }

    /// CSV of the diagonal mass weights over live slots.
    pub fn write_mass_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "slot,weight")?;
        for slot in 0..self.n_slots() {
            if self.grid.live[slot] {
                writeln!(w, "{slot},{:.16e}", self.mass_of(slot))?;
            }
        }
        Ok(())
    }

    /// Consistency guard for hand-built vectors in tests.
    pub fn assert_dead_zero(&self, x: &[f64]) -> Result<()> {
        for (slot, &v) in x.iter().enumerate() {
            if !self.grid.live[slot] && v != 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "vector carries non-zero value at dead slot {slot}"
                )));
            }
        }
        Ok(())
    }
}

/// Chunked deterministic dot product: fixed 4096-wide partial sums combined in
/// order, so results are identical run to run.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut total = 0.0f64;
    for (ca, cb) in a.chunks(4096).zip(b.chunks(4096)) {
        let mut part = 0.0f64;
        for i in 0..ca.len() {
            part += ca[i] * cb[i];
        }
        total += part;
    }
    total
}

// Smallest eigenvalue of the symmetric tridiagonal (alphas; betas) by Sturm
// bisection: count(x) = number of eigenvalues below x via the standard LDLᵀ
// pivot recurrence.
fn smallest_tridiag_eig(alphas: &[f64], betas: &[f64]) -> f64 {
    let k = alphas.len();
    if k == 0 {
        return 0.0;
    }
    let count_below = |x: f64| -> usize {
        let mut cnt = 0usize;
        let mut d = alphas[0] - x;
        if d < 0.0 {
            cnt += 1;
        }
        for i in 1..k {
            let b2 = betas[i - 1] * betas[i - 1];
            let denom = if d.abs() < 1e-300 { 1e-300f64.copysign(d) } else { d };
            d = alphas[i] - x - b2 / denom;
            if d < 0.0 {
                cnt += 1;
            }
        }
        cnt
    };
    let mut radius = 0.0f64;
    for i in 0..k {
        let b_lo = if i > 0 { betas[i - 1].abs() } else { 0.0 };
        let b_hi = if i < betas.len() { betas[i].abs() } else { 0.0 };
        radius = radius.max(alphas[i].abs() + b_lo + b_hi);
    }
    let mut lo = -radius - 1.0;
    let mut hi = radius + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
