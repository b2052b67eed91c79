//! Single-domain experiments: the two deterministic solves, the combined
//! product-with-bounds report, the two stochastic estimators, and the
//! three-way oracle comparison.

use std::fs::File;
use std::io::BufWriter;
use std::io::Write as IoWrite;

use serde::Serialize;

use torsionlab::bounds::{check_all, PerforatedAux};
use torsionlab::discretize::{assemble_unit_cell, SparseOperator};
use torsionlab::geometry::{make_perforated_cube, DomainSpec, PerforatedCubeParams};
use torsionlab::solvers::{
    assemble_operator, principal_eigenvalue, richardson, solve_torsion, spectral_product,
    write_field_csv,
};
use torsionlab::stochastic::{
    default_eps_shell, survival_torsion, wos_torsion_threads, SurvivalEstimate, WosEstimate,
};
use torsionlab::{Error, Result};

use crate::config::{default_h, domain_label, ExperimentConfig};
use crate::{fmt_point, out_path, write_bound_csv, write_json, RunStatus, VERSION};

pub(crate) fn configured_domain(cfg: &ExperimentConfig) -> Result<DomainSpec> {
    let spec = cfg
        .domain
        .clone()
        .unwrap_or(DomainSpec::Box { sides: vec![1.0, 1.0] });
    spec.validate()?;
    Ok(spec)
}

pub(crate) fn resolve_h(cfg: &ExperimentConfig, spec: &DomainSpec) -> Result<f64> {
    match cfg.h {
        Some(h) if h > 0.0 && h.is_finite() => Ok(h),
        Some(h) => Err(Error::InvalidConfig(format!(
            "h must be positive and finite, got {h}"
        ))),
        None => default_h(spec),
    }
}

/// Companion spacing for Richardson control, mirroring the product pipeline:
/// prefer the cheap coarse solve, fall back to h/2 when 2h cannot resolve
/// the geometry.
fn companion_operator(spec: &DomainSpec, h: f64) -> Result<(f64, SparseOperator)> {
    match assemble_operator(spec, 2.0 * h) {
        Ok(op) => Ok((2.0 * h, op)),
        Err(Error::Unresolvable { .. }) => Ok((0.5 * h, assemble_operator(spec, 0.5 * h)?)),
        Err(e) => Err(e),
    }
}

/// Richardson pair ordered (coarse, fine); returns the extrapolated value
/// and the relative distance of the main (spacing h) value from it.
fn second_order_error(value_main: f64, h: f64, value_companion: f64, companion_h: f64) -> (f64, f64) {
    let (coarse, fine) = if companion_h > h {
        (value_companion, value_main)
    } else {
        (value_main, value_companion)
    };
    let (x, _) = richardson(coarse, fine, 2);
    (x, (value_main - x).abs() / x.abs().max(f64::MIN_POSITIVE))
}

/// Probe of last resort: the bounding-box midpoint, except for perforated
/// cubes where the midpoint sits inside a hole when the per-axis count is
/// odd; a subcube-corner lattice point is hole-free for either parity.
pub(crate) fn default_probe(spec: &DomainSpec) -> Vec<f64> {
    if let DomainSpec::PerforatedCube(p) = spec {
        let x = if p.holes_per_axis % 2 == 0 {
            0.0
        } else {
            p.side / (2.0 * p.holes_per_axis as f64)
        };
        return vec![x; p.m];
    }
    let (lo, hi) = spec.bounding_box();
    lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect()
}

pub(crate) fn probe_point(cfg: &ExperimentConfig, spec: &DomainSpec) -> Vec<f64> {
    cfg.probe.clone().unwrap_or_else(|| default_probe(spec))
}

/// The symmetry-reduced perforated grid lives in the nonnegative quadrant;
/// mirror coordinates there before snapping to its nodes.
pub(crate) fn grid_probe(spec: &DomainSpec, x: &[f64]) -> Vec<f64> {
    match spec {
        DomainSpec::PerforatedCube(_) => x.iter().map(|c| c.abs()).collect(),
        _ => x.to_vec(),
    }
}

/// Unit-cell eigenvalue (Neumann outer walls, Dirichlet ball) with its own
/// Richardson pair at the same spacing as the full-domain solve.
pub(crate) fn unit_cell_mu1(p: &PerforatedCubeParams, h: f64) -> Result<(f64, f64)> {
    let cell = p.side / p.holes_per_axis as f64;
    let main = principal_eigenvalue(&assemble_unit_cell(p.m, cell, p.hole_radius, h)?)?;
    let (ch, op_c) = match assemble_unit_cell(p.m, cell, p.hole_radius, 2.0 * h) {
        Ok(op) => (2.0 * h, op),
        Err(Error::Unresolvable { .. }) => {
            (0.5 * h, assemble_unit_cell(p.m, cell, p.hole_radius, 0.5 * h)?)
        }
        Err(e) => return Err(e),
    };
    let companion = principal_eigenvalue(&op_c)?;
    let (_, err) = second_order_error(main.value, h, companion.value, ch);
    Ok((main.value, err))
}

pub(crate) fn perforated_aux(spec: &DomainSpec, h: f64) -> Result<Option<PerforatedAux>> {
    let DomainSpec::PerforatedCube(p) = spec else {
        return Ok(None);
    };
    let (mu1, mu1_error) = unit_cell_mu1(p, h)?;
    Ok(Some(PerforatedAux {
        mu1,
        mu1_error,
        highdim_constant: None,
        rate_constant: None,
    }))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct TorsionReport {
    domain: DomainSpec,
    label: String,
    h: f64,
    companion_h: f64,
    live_nodes: usize,
    sup_norm: f64,
    sup_error: f64,
    sup_extrapolated: f64,
    argmax: Vec<f64>,
    probe: Vec<f64>,
    probe_value: f64,
    cg_iterations: usize,
    cg_residual: f64,
    seed: u64,
    version: &'static str,
}

pub fn run_torsion(cfg: &ExperimentConfig) -> Result<RunStatus> {
    let spec = configured_domain(cfg)?;
    let h = resolve_h(cfg, &spec)?;
    let op = assemble_operator(&spec, h)?;
    let tor = solve_torsion(&op)?;
    let (companion_h, op_c) = companion_operator(&spec, h)?;
    let tor_c = solve_torsion(&op_c)?;
    let (sup_x, sup_error) = second_order_error(tor.sup_norm, h, tor_c.sup_norm, companion_h);

    let slot = op.grid.nearest_live(&grid_probe(&spec, &probe_point(cfg, &spec)))?;
    let report = TorsionReport {
        label: domain_label(&spec),
        h,
        companion_h,
        live_nodes: op.grid.live_count,
        sup_norm: tor.sup_norm,
        sup_error,
        sup_extrapolated: sup_x,
        argmax: op.grid.coords(tor.argmax),
        probe: op.grid.coords(slot),
        probe_value: tor.field[slot],
        cg_iterations: tor.cg.iterations,
        cg_residual: tor.cg.relative_residual,
        seed: cfg.seed(),
        version: VERSION,
        domain: spec,
    };
    write_json(&out_path(cfg, "torsion.json")?, &report)?;
    let mut w = BufWriter::new(File::create(out_path(cfg, "torsion_field.csv")?)?);
    write_field_csv(&op.grid, &tor.field, &mut w)?;

    println!(
        "torsion {}: sup {:.6e} (rel err {:.1e}) at {}, v{} = {:.6e}, {} live nodes, h = {:.3e}",
        report.label,
        report.sup_norm,
        report.sup_error,
        fmt_point(&report.argmax),
        fmt_point(&report.probe),
        report.probe_value,
        report.live_nodes,
        h
    );
    Ok(RunStatus::Clean)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct EigReport {
    domain: DomainSpec,
    label: String,
    h: f64,
    companion_h: f64,
    live_nodes: usize,
    lambda1: f64,
    lambda_error: f64,
    lambda_extrapolated: f64,
    outer_iterations: usize,
    inner_iterations: usize,
    residual: f64,
    slow_convergence: bool,
    seed: u64,
    version: &'static str,
}

pub fn run_eig(cfg: &ExperimentConfig) -> Result<RunStatus> {
    let spec = configured_domain(cfg)?;
    let h = resolve_h(cfg, &spec)?;
    let op = assemble_operator(&spec, h)?;
    let eig = principal_eigenvalue(&op)?;
    let (companion_h, op_c) = companion_operator(&spec, h)?;
    let eig_c = principal_eigenvalue(&op_c)?;
    let (lam_x, lambda_error) = second_order_error(eig.value, h, eig_c.value, companion_h);

    let report = EigReport {
        label: domain_label(&spec),
        h,
        companion_h,
        live_nodes: op.grid.live_count,
        lambda1: eig.value,
        lambda_error,
        lambda_extrapolated: lam_x,
        outer_iterations: eig.outer_iterations,
        inner_iterations: eig.inner_iterations,
        residual: eig.residual,
        slow_convergence: eig.slow,
        seed: cfg.seed(),
        version: VERSION,
        domain: spec,
    };
    write_json(&out_path(cfg, "eig.json")?, &report)?;

    println!(
        "eig {}: lambda1 {:.6e} (rel err {:.1e}), {} outer / {} inner iterations, h = {:.3e}",
        report.label, report.lambda1, report.lambda_error, report.outer_iterations, report.inner_iterations, h
    );
    Ok(RunStatus::Clean)
}

pub fn run_product(cfg: &ExperimentConfig) -> Result<RunStatus> {
    let spec = configured_domain(cfg)?;
    let h = resolve_h(cfg, &spec)?;
    let result = spectral_product(&spec, h)?;
    let aux = perforated_aux(&spec, h)?;
    let report = check_all(&result, &spec, aux.as_ref());
    let label = domain_label(&spec);

    write_json(&out_path(cfg, "product.json")?, &result)?;
    write_json(&out_path(cfg, "bounds.json")?, &report)?;
    write_bound_csv(
        &out_path(cfg, "bounds.csv")?,
        &[(label.clone(), &report)],
        cfg.tolerance_factor(),
        cfg.seed(),
    )?;

    println!(
        "product {}: lambda1 {:.6e} * sup {:.6e} = {:.6e} (rel err {:.1e}), h = {:.3e}",
        label, result.lambda1, result.sup_norm, result.product, result.error_estimate, h
    );
    let failures = report.failures();
    for f in &failures {
        println!(
            "  FAIL {} [{}]: {:.6e} <= {:.6e} violated",
            f.name, f.paper_ref, f.lhs, f.rhs
        );
    }
    if failures.is_empty() {
        println!("  all {} bound entries clean", report.entries.len());
        Ok(RunStatus::Clean)
    } else {
        Ok(RunStatus::BoundFailure)
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct WosReport {
    domain: DomainSpec,
    label: String,
    probe: Vec<f64>,
    threads: usize,
    estimate: WosEstimate,
    version: &'static str,
}

pub fn run_wos(cfg: &ExperimentConfig) -> Result<RunStatus> {
    // The canonical walk target is the unit disk: the exact exit time at
    // the centre is known, so a bare `wos` run doubles as a smoke test.
    let spec = cfg
        .domain
        .clone()
        .unwrap_or(DomainSpec::Disk { center: [0.0, 0.0], radius: 1.0 });
    spec.validate()?;
    let probe = probe_point(cfg, &spec);
    let n_walks = cfg.n_walks.unwrap_or(100_000);
    let eps_shell = cfg.eps_shell.unwrap_or_else(|| default_eps_shell(&spec));
    let estimate = wos_torsion_threads(&spec, &probe, n_walks, eps_shell, cfg.seed(), cfg.threads())?;

    let report = WosReport {
        label: domain_label(&spec),
        probe: probe.clone(),
        threads: cfg.threads(),
        estimate,
        version: VERSION,
        domain: spec,
    };
    write_json(&out_path(cfg, "wos.json")?, &report)?;

    println!(
        "wos {}: v{} = {:.6e} +- {:.2e} ({} walks, {} discarded, {:.1} mean steps, shell {:.1e})",
        report.label,
        fmt_point(&report.probe),
        report.estimate.mean,
        report.estimate.stderr,
        report.estimate.n_walks,
        report.estimate.discarded,
        report.estimate.mean_steps,
        report.estimate.eps_shell
    );
    Ok(RunStatus::Clean)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SurvivalReport {
    domain: DomainSpec,
    label: String,
    estimate: SurvivalEstimate,
    version: &'static str,
}

pub fn run_survival(cfg: &ExperimentConfig) -> Result<RunStatus> {
    let spec = configured_domain(cfg)?;
    let h = resolve_h(cfg, &spec)?;
    let probe = probe_point(cfg, &spec);
    // Horizon defaults hang off a coarse eigenvalue solve: 12 decay times
    // leaves e^-12 of the heat content to the analytic tail, and 10 steps
    // per decay time keeps the time-stepping error under the spatial one.
    let (dt, t_max) = match (cfg.dt, cfg.t_max) {
        (Some(dt), Some(t)) => (dt, t),
        (dt, t) => {
            let lam = principal_eigenvalue(&assemble_operator(&spec, 2.0 * h)?)?.value;
            (dt.unwrap_or(0.1 / lam), t.unwrap_or(12.0 / lam))
        }
    };
    let estimate = survival_torsion(&spec, &probe, h, dt, t_max)?;

    let mut w = BufWriter::new(File::create(out_path(cfg, "survival_curve.csv")?)?);
    estimate.write_csv(&mut w)?;
    drop(w);
    let report = SurvivalReport {
        label: domain_label(&spec),
        estimate,
        version: VERSION,
        domain: spec,
    };
    write_json(&out_path(cfg, "survival.json")?, &report)?;

    println!(
        "survival {}: v{} = {:.6e} (tail fraction {:.2e}, lambda {:.6e}, dt {:.3e}, horizon {:.3e})",
        report.label,
        fmt_point(&report.estimate.probe),
        report.estimate.value,
        report.estimate.tail_fraction,
        report.estimate.lambda,
        report.estimate.dt,
        report.estimate.t_max
    );
    Ok(RunStatus::Clean)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct OracleRow {
    domain: String,
    probe: Vec<f64>,
    h: f64,
    fd_value: f64,
    fd_error: f64,
    wos_mean: f64,
    wos_stderr: f64,
    wos_walks: u64,
    wos_discarded: u64,
    survival_value: f64,
    survival_tail_fraction: f64,
    wos_agrees: bool,
    survival_agrees: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct OracleReport {
    rows: Vec<OracleRow>,
    n_walks: u64,
    tolerance_factor: f64,
    seed: u64,
    version: &'static str,
}

/// Three estimates of the same point value from unrelated discretisations:
/// the grid solve, the walk estimator, and the survival quadrature. The walk
/// is granted its own statistical band, the quadrature a 1% relative band.
pub fn run_oracle_check(cfg: &ExperimentConfig) -> Result<RunStatus> {
    let corpus = match &cfg.domains {
        Some(list) => list.clone(),
        None => vec![
            DomainSpec::Box { sides: vec![1.0, 1.0] },
            DomainSpec::Disk { center: [0.0, 0.0], radius: 1.0 },
            make_perforated_cube(2, 1.0, 2, 0.05)?,
        ],
    };
    if corpus.is_empty() {
        return Err(Error::InvalidConfig("no domains configured".into()));
    }
    let n_walks = cfg.n_walks.unwrap_or(20_000);
    let tol = cfg.tolerance_factor();

    let mut rows = Vec::new();
    for spec in &corpus {
        spec.validate()?;
        let h = resolve_h(cfg, spec)?;
        let op = assemble_operator(spec, h)?;
        let tor = solve_torsion(&op)?;
        let eig = principal_eigenvalue(&op)?;
        let (companion_h, op_c) = companion_operator(spec, h)?;
        let tor_c = solve_torsion(&op_c)?;

        let slot = op.grid.nearest_live(&grid_probe(spec, &probe_point(cfg, spec)))?;
        let probe = op.grid.coords(slot);
        let fd_value = tor.field[slot];
        let slot_c = op_c.grid.nearest_live(&grid_probe(spec, &probe))?;
        let (_, fd_error) = second_order_error(fd_value, h, tor_c.field[slot_c], companion_h);

        let eps_shell = cfg.eps_shell.unwrap_or_else(|| default_eps_shell(spec));
        let wos = wos_torsion_threads(spec, &probe, n_walks, eps_shell, cfg.seed(), cfg.threads())?;
        let dt = cfg.dt.unwrap_or(0.1 / eig.value);
        let t_max = cfg.t_max.unwrap_or(12.0 / eig.value);
        let surv = survival_torsion(spec, &probe, h, dt, t_max)?;

        let wos_agrees = (wos.mean - fd_value).abs() <= tol * wos.stderr + 1e-3;
        let survival_agrees = (surv.value - fd_value).abs() <= 0.01 * fd_value.abs();
        println!(
            "oracle {}: v{} grid {:.6e}, walk {:.6e} +- {:.2e} ({}), survival {:.6e} ({})",
            domain_label(spec),
            fmt_point(&probe),
            fd_value,
            wos.mean,
            wos.stderr,
            if wos_agrees { "agrees" } else { "DISAGREES" },
            surv.value,
            if survival_agrees { "agrees" } else { "DISAGREES" },
        );
        rows.push(OracleRow {
            domain: domain_label(spec),
            probe,
            h,
            fd_value,
            fd_error,
            wos_mean: wos.mean,
            wos_stderr: wos.stderr,
            wos_walks: wos.n_walks,
            wos_discarded: wos.discarded,
            survival_value: surv.value,
            survival_tail_fraction: surv.tail_fraction,
            wos_agrees,
            survival_agrees,
        });
    }

    let mut w = BufWriter::new(File::create(out_path(cfg, "oracle_check.csv")?)?);
    writeln!(
        w,
        "domain,probe,h,fdValue,fdError,wosMean,wosStderr,wosWalks,wosDiscarded,survivalValue,survivalTailFraction,wosAgrees,survivalAgrees,toleranceFactor,seed,version"
    )?;
    for r in &rows {
        let probe: Vec<String> = r.probe.iter().map(|c| format!("{c:.12e}")).collect();
        writeln!(
            w,
            "{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{},{:.12e},{:.12e},{},{},{},{},{}",
            r.domain,
            probe.join(";"),
            r.h,
            r.fd_value,
            r.fd_error,
            r.wos_mean,
            r.wos_stderr,
            r.wos_walks,
            r.wos_discarded,
            r.survival_value,
            r.survival_tail_fraction,
            r.wos_agrees,
            r.survival_agrees,
            tol,
            cfg.seed(),
            VERSION
        )?;
    }
    drop(w);

    let all_agree = rows.iter().all(|r| r.wos_agrees && r.survival_agrees);
    let report = OracleReport {
        rows,
        n_walks,
        tolerance_factor: tol,
        seed: cfg.seed(),
        version: VERSION,
    };
    write_json(&out_path(cfg, "oracle_check.json")?, &report)?;

    if all_agree {
        Ok(RunStatus::Clean)
    } else {
        Ok(RunStatus::BoundFailure)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_probe_avoids_holes() {
        let even = make_perforated_cube(2, 1.0, 4, 0.02).unwrap();
        assert_eq!(default_probe(&even), vec![0.0, 0.0]);
        // Odd lattice: the cube centre is a hole centre, the fallback moves
        // to the nearest subcube corner.
        let odd = make_perforated_cube(2, 1.0, 3, 0.02).unwrap();
        let p = default_probe(&odd);
        assert_eq!(p, vec![1.0 / 6.0, 1.0 / 6.0]);
        assert!(odd.contains(&p).unwrap());
        assert!(!odd.contains(&[0.0, 0.0]).unwrap());

        let disk = DomainSpec::Disk { center: [2.0, -1.0], radius: 0.5 };
        assert_eq!(default_probe(&disk), vec![2.0, -1.0]);
    }

    #[test]
    fn torsion_runner_writes_reports() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            h: Some(1.0 / 16.0),
            out: Some(dir.path().to_path_buf()),
            ..Default::default()
        };
        let status = run_torsion(&cfg).unwrap();
        assert_eq!(status, RunStatus::Clean);
        let text = std::fs::read_to_string(dir.path().join("torsion.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        println!("supNorm = {}", v["supNorm"]);
        // Coarse square solve still lands near the series value 0.0737.
        let sup = v["supNorm"].as_f64().unwrap();
        assert!((sup - 0.073671).abs() < 1e-3, "sup {sup}");
        assert_eq!(v["version"].as_str().unwrap(), VERSION);
        let field = std::fs::read_to_string(dir.path().join("torsion_field.csv")).unwrap();
        assert!(field.starts_with("slot,x0,x1,value"));
        assert_eq!(field.lines().count(), 15 * 15 + 1);
    }

    #[test]
    fn product_runner_flags_nothing_on_the_square() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            h: Some(1.0 / 24.0),
            out: Some(dir.path().to_path_buf()),
            ..Default::default()
        };
        assert_eq!(run_product(&cfg).unwrap(), RunStatus::Clean);
        let csv = std::fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
        println!("{csv}");
        assert!(csv.starts_with("domain,h,errorEstimate,name,paperRef"));
        assert!(csv.contains("box-1x1"));
        // No row may combine preconditionsMet = true with satisfied = false.
        assert!(!csv.contains(",true,false,"));
    }
}
