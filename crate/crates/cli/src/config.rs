//! Declarative experiment description: one JSON file selects the experiment,
//! the domain or sweep family, and the numerical knobs. Flags override the
//! file; whatever is still unset falls back to per-experiment defaults that
//! reproduce the standard verification battery with no configuration at all.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use torsionlab::geometry::{critical_hole_radius, measurements_for, DomainSpec, PerforatedCubeParams};
use torsionlab::{Error, Result};

/// One member of a perforated sweep. Without an explicit radius the critical
/// schedule delta*(alpha, N, L) supplies it.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PerforatedCase {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when both are given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    /// Corpus for verify-bounds and oracle-check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domains: Option<Vec<DomainSpec>>,
    /// Grid step; default comes from the per-domain selection rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Rectangle/ellipse elongations for the convex sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect_ratios: Option<Vec<f64>>,
    /// Which convex families to sweep: any of "rectangle", "ellipse".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shapes: Option<Vec<String>>,
    /// Perforated sweep: hole-count schedule exponent, cube side, dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cases: Option<Vec<PerforatedCase>>,
    /// Evaluation point for torsion/wos/survival.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_walks: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_shell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Multiplier on error estimates granted to trend and agreement checks.
    /// (Closed-form bound entries keep their fixed 3x slack.)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance_factor: Option<f64>,
    /// Directory receiving report files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// verify-bounds only: re-judge stored measurements instead of solving.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    /// Flags beat the file.
    pub fn apply_overrides(
        &mut self,
        h: Option<f64>,
        seed: Option<u64>,
        out: Option<PathBuf>,
        threads: Option<usize>,
    ) {
        if h.is_some() {
            self.h = h;
        }
        if seed.is_some() {
            self.seed = seed;
        }
        if out.is_some() {
            self.out = out;
        }
        if threads.is_some() {
            self.threads = threads;
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn threads(&self) -> usize {
        self.threads.unwrap_or(1).max(1)
    }

    pub fn tolerance_factor(&self) -> f64 {
        self.tolerance_factor.unwrap_or(3.0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

/// Default grid step: an eighth of the hole radius (capped by a 64-cell
/// subcube rule) for perforated domains, 1/128 of the width for convex ones.
pub fn default_h(spec: &DomainSpec) -> Result<f64> {
    match spec {
        DomainSpec::PerforatedCube(p) => {
            Ok((p.hole_radius / 8.0).min(p.side / (64.0 * p.holes_per_axis as f64)))
        }
        _ => match measurements_for(spec) {
            Some(meas) => Ok(meas.width / 128.0),
            // Boxes above two dimensions have no planar measurements; the
            // shortest side plays the width's role.
            None => match spec {
                DomainSpec::Box { sides } => {
                    Ok(sides.iter().cloned().fold(f64::INFINITY, f64::min) / 128.0)
                }
                _ => Err(Error::InvalidConfig(
                    "no default grid step for this domain; pass h explicitly".into(),
                )),
            },
        },
    }
}

/// The standard five-domain verification corpus.
pub fn default_corpus() -> Vec<DomainSpec> {
    let delta = critical_hole_radius(2, 4.0 / 3.0, 4, 1.0)
        .expect("schedule for the default corpus is in regime")
        .radius;
    vec![
        DomainSpec::Box { sides: vec![1.0, 1.0] },
        DomainSpec::Disk { center: [0.0, 0.0], radius: 1.0 },
        DomainSpec::Box { sides: vec![10.0, 1.0] },
        DomainSpec::Ellipse { center: [0.0, 0.0], a: 2.5, b: 0.5 },
        DomainSpec::PerforatedCube(PerforatedCubeParams {
            m: 2,
            side: 1.0,
            holes_per_axis: 4,
            hole_radius: delta,
        }),
    ]
}

/// Short stable label for report rows.
pub fn domain_label(spec: &DomainSpec) -> String {
    match spec {
        DomainSpec::Box { sides } => {
            let dims: Vec<String> = sides.iter().map(|s| format!("{s}")).collect();
            format!("box-{}", dims.join("x"))
        }
        DomainSpec::Disk { radius, .. } => format!("disk-r{radius}"),
        DomainSpec::Ellipse { a, b, .. } => format!("ellipse-{a}x{b}"),
        DomainSpec::ConvexPolygon { vertices } => format!("polygon-{}v", vertices.len()),
        DomainSpec::PerforatedCube(p) => {
            format!("perforated-m{}-n{}-d{:.6e}", p.m, p.holes_per_axis, p.hole_radius)
        }
    }
}
