//! The corpus-wide audit: solve every configured domain (or replay stored
//! measurements) and confront each spectrum with the closed-form rules.

use serde::{Deserialize, Serialize};

use torsionlab::bounds::{check_scalars, BoundReport, PerforatedAux};
use torsionlab::geometry::DomainSpec;
use torsionlab::solvers::spectral_product;
use torsionlab::{Error, Result};

use crate::config::{default_corpus, domain_label, ExperimentConfig};
use crate::runners::{perforated_aux, resolve_h};
use crate::{ordered_parallel, out_path, write_bound_csv, write_json, RunStatus};

/// Persistent record of one audited solve, sufficient to re-judge the bounds
/// later without any field data.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Measurement {
    pub domain: DomainSpec,
    pub label: String,
    pub h: f64,
    pub error_estimate: f64,
    pub lambda1: f64,
    pub sup_norm: f64,
    pub product: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu1_error: Option<f64>,
}

pub fn run_verify_bounds(cfg: &ExperimentConfig) -> Result<RunStatus> {
    let measurements = match &cfg.replay {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
            let list: Vec<Measurement> = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
            println!(
                "verify-bounds: replaying {} stored measurements from {}",
                list.len(),
                path.display()
            );
            list
        }
        None => solve_corpus(cfg)?,
    };
    if measurements.is_empty() {
        return Err(Error::InvalidConfig("no domains configured".into()));
    }

    let reports: Vec<BoundReport> = measurements
        .iter()
        .map(|meas| {
            let aux = meas.mu1.map(|mu1| PerforatedAux {
                mu1,
                mu1_error: meas.mu1_error.unwrap_or(meas.error_estimate),
                highdim_constant: None,
                rate_constant: None,
            });
            // The product is recomputed from its factors: a replayed file
            // edited inconsistently is judged on what the numbers imply,
            // not on what it claims.
            check_scalars(
                meas.lambda1,
                meas.sup_norm,
                meas.lambda1 * meas.sup_norm,
                meas.error_estimate,
                meas.h,
                &meas.domain,
                aux.as_ref(),
            )
        })
        .collect();

    write_json(&out_path(cfg, "measurements.json")?, &measurements)?;
    write_json(&out_path(cfg, "bounds.json")?, &reports)?;
    let labelled: Vec<(String, &BoundReport)> = measurements
        .iter()
        .zip(&reports)
        .map(|(m, r)| (m.label.clone(), r))
        .collect();
    write_bound_csv(&out_path(cfg, "bounds.csv")?, &labelled, cfg.tolerance_factor(), cfg.seed())?;

    let mut any_failure = false;
    for (meas, rep) in measurements.iter().zip(&reports) {
        let failures = rep.failures();
        let live = rep.entries.iter().filter(|e| e.preconditions_met).count();
        println!(
            "verify {}: lambda1 {:.6e}, sup {:.6e}, product {:.6e}; {}/{} live entries clean",
            meas.label,
            meas.lambda1,
            meas.sup_norm,
            meas.lambda1 * meas.sup_norm,
            live - failures.len(),
            live
        );
        for f in &failures {
            println!(
                "  FAIL {} [{}]: {:.6e} <= {:.6e} violated",
                f.name, f.paper_ref, f.lhs, f.rhs
            );
        }
        any_failure |= !failures.is_empty();
    }
    if any_failure {
        Ok(RunStatus::BoundFailure)
    } else {
        Ok(RunStatus::Clean)
    }
}

fn solve_corpus(cfg: &ExperimentConfig) -> Result<Vec<Measurement>> {
    let corpus = cfg.domains.clone().unwrap_or_else(default_corpus);
    if corpus.is_empty() {
        return Err(Error::InvalidConfig("no domains configured".into()));
    }
    // A configured h is validated against every member before solving any.
    let mut members = Vec::new();
    for spec in corpus {
        spec.validate()?;
        let h = resolve_h(cfg, &spec)?;
        if let Some(f) = spec.min_feature() {
            if h > f / 8.0 * (1.0 + 1e-12) {
                return Err(Error::Unresolvable {
                    max_h: f / 8.0,
                    detail: format!("{} in the corpus", domain_label(&spec)),
                });
            }
        }
        members.push((spec, h));
    }
    let solved = ordered_parallel(&members, cfg.threads(), |_, (spec, h)| {
        let r = spectral_product(spec, *h)?;
        let aux = perforated_aux(spec, *h)?;
        Ok::<Measurement, Error>(Measurement {
            label: domain_label(spec),
            h: *h,
            error_estimate: r.error_estimate,
            lambda1: r.lambda1,
            sup_norm: r.sup_norm,
            product: r.product,
            mu1: aux.as_ref().map(|a| a.mu1),
            mu1_error: aux.as_ref().map(|a| a.mu1_error),
            domain: spec.clone(),
        })
    });
    let mut out = Vec::new();
    for s in solved {
        out.push(s?);
    }
    Ok(out)
}
