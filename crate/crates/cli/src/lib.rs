//! Batch experiment runner over the torsionlab numerics: single-domain
//! solves, elongation and perforation sweeps, corpus-wide bound audits, and
//! stochastic cross-checks, all driven by one declarative JSON file plus a
//! handful of flag overrides.
//!
//! Every experiment writes machine-readable reports (JSON) and plot-ready
//! tables (CSV) into the output directory and prints a short summary per
//! case. The process exit code separates "a checked inequality failed" (1)
//! from "the configuration or a solver is broken" (2); both are distinct
//! from a clean run (0), so scripts can gate on the audit outcome alone.
//!
//! Reproducibility contract: with a fixed config and seed, single-threaded
//! runs produce byte-identical CSV output. Report assembly is ordered by
//! sweep index even when solves run concurrently, and nothing time- or
//! machine-dependent is written into reports.

pub mod config;
pub mod runners;
pub mod sweeps;
pub mod verify;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use torsionlab::bounds::BoundReport;
use torsionlab::{Error, Result};

use config::ExperimentConfig;

/// Tool version stamped into every report row.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// What a completed run found. Solver and configuration problems travel as
/// `Err`; this only distinguishes clean reports from failed checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Clean,
    BoundFailure,
}

/// Dispatch by subcommand name.
pub fn run(experiment: &str, cfg: &ExperimentConfig) -> Result<RunStatus> {
    match experiment {
        "torsion" => runners::run_torsion(cfg),
        "eig" => runners::run_eig(cfg),
        "product" => runners::run_product(cfg),
        "wos" => runners::run_wos(cfg),
        "survival" => runners::run_survival(cfg),
        "oracle-check" => runners::run_oracle_check(cfg),
        "convex-sweep" => sweeps::run_convex_sweep(cfg),
        "perforated-sweep" => sweeps::run_perforated_sweep(cfg),
        "verify-bounds" => verify::run_verify_bounds(cfg),
        other => Err(Error::InvalidConfig(format!("unknown experiment {other:?}"))),
    }
}

/// Resolve a report path inside the output directory, creating the
/// directory on first use.
pub(crate) fn out_path(cfg: &ExperimentConfig, name: &str) -> Result<PathBuf> {
    let dir = cfg.out_dir();
    std::fs::create_dir_all(&dir)?;
    Ok(dir.join(name))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Bound entries flattened to CSV with full provenance, one block of rows
/// per judged domain.
pub(crate) fn write_bound_csv(
    path: &Path,
    labelled: &[(String, &BoundReport)],
    tolerance_factor: f64,
    seed: u64,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "domain,h,errorEstimate,name,paperRef,lhs,rhs,preconditionsMet,satisfied,margin,toleranceFactor,seed,version"
    )?;
    for (label, report) in labelled {
        for e in &report.entries {
            writeln!(
                w,
                "{},{:.12e},{:.12e},{},{},{:.12e},{:.12e},{},{},{:.12e},{},{},{}",
                label,
                report.h,
                report.error_estimate,
                e.name,
                e.paper_ref,
                e.lhs,
                e.rhs,
                e.preconditions_met,
                e.satisfied,
                e.margin,
                tolerance_factor,
                seed,
                VERSION
            )?;
        }
    }
    Ok(())
}

/// How one inequality entry reads in a sweep table: checks whose regime
/// assumptions fail are "skipped", never pass/fail.
pub(crate) fn entry_flag(report: &BoundReport, name: &str) -> &'static str {
    match report.entry(name) {
        Some(e) if !e.preconditions_met => "skipped",
        Some(e) if e.satisfied => "pass",
        Some(_) => "fail",
        None => "absent",
    }
}

pub(crate) fn fmt_point(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|c| format!("{c:.6}")).collect();
    format!("({})", parts.join(", "))
}

/// Run `f` over the items on up to `threads` workers, returning results in
/// item order regardless of completion order. Item order is what makes
/// multi-threaded sweep reports deterministic.
pub(crate) fn ordered_parallel<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let n = items.len();
    if threads.max(1) <= 1 || n <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<R>> = Vec::new();
    slots.resize_with(n, || None);
    let slots = Mutex::new(slots);
    std::thread::scope(|scope| {
        for _ in 0..threads.min(n) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = f(i, &items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every slot was claimed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_parallel_preserves_item_order() {
        let items: Vec<usize> = (0..37).collect();
        let serial = ordered_parallel(&items, 1, |i, &x| (i, x * x));
        let parallel = ordered_parallel(&items, 4, |i, &x| (i, x * x));
        assert_eq!(serial, parallel);
        for (i, (j, sq)) in parallel.iter().enumerate() {
            assert_eq!(i, *j);
            assert_eq!(*sq, i * i);
        }
    }

    #[test]
    fn unknown_experiment_is_a_config_error() {
        let cfg = ExperimentConfig::default();
        match run("warp-drive", &cfg) {
            Err(Error::InvalidConfig(msg)) => assert!(msg.contains("warp-drive")),
            other => panic!("expected a config error, got {other:?}"),
        }
    }
}
