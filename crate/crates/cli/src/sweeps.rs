//! The two sweep experiments: convex elongation (the product falling toward
//! the slab value pi^2/8) and cube perforation along the critical hole
//! schedule (the product falling toward the floor 1).

use std::fs::File;
use std::io::BufWriter;
use std::io::Write as IoWrite;

use serde::Serialize;

use torsionlab::bounds::{check_all, check_scalars, BoundReport, PerforatedAux};
use torsionlab::geometry::{critical_hole_radius, make_perforated_cube, measurements_for, DomainSpec};
use torsionlab::solvers::{spectral_product, SpectralResult};
use torsionlab::{Error, Result};

use crate::config::{domain_label, ExperimentConfig, PerforatedCase};
use crate::runners::resolve_h;
use crate::runners::unit_cell_mu1;
use crate::{entry_flag, ordered_parallel, out_path, write_bound_csv, write_json, RunStatus, VERSION};

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ConvexCase {
    shape: String,
    aspect: f64,
    width: f64,
    diameter: f64,
    chord: f64,
    h: f64,
    companion_h: f64,
    live_nodes: usize,
    lambda1: f64,
    lambda_error: f64,
    sup_norm: f64,
    sup_error: f64,
    product: f64,
    product_error: f64,
    error_estimate: f64,
    bounds: BoundReport,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ConvexTrend {
    shape: String,
    monotone_decreasing: bool,
    final_product: f64,
    /// Relative distance of the most elongated member from pi^2/8.
    slab_gap: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ConvexSweepReport {
    shapes: Vec<String>,
    aspects: Vec<f64>,
    slab_product: f64,
    cases: Vec<ConvexCase>,
    trends: Vec<ConvexTrend>,
    tolerance_factor: f64,
    seed: u64,
    version: &'static str,
}

/// Rectangles 1 x A and ellipses of the same width and diameter, one row per
/// aspect ratio; every member carries the full bound report and the family
/// trend is judged against the slab limit.
pub fn run_convex_sweep(cfg: &ExperimentConfig) -> Result<RunStatus> {
    let aspects = cfg
        .aspect_ratios
        .clone()
        .unwrap_or_else(|| vec![1.0, 2.0, 5.0, 10.0, 20.0]);
    if aspects.is_empty() {
        return Err(Error::InvalidConfig("aspect-ratio list is empty".into()));
    }
    for &a in &aspects {
        if !(a.is_finite() && a >= 1.0) {
            return Err(Error::InvalidConfig(format!("aspect ratios must be >= 1, got {a}")));
        }
    }
    let mut shapes = cfg
        .shapes
        .clone()
        .unwrap_or_else(|| vec!["rectangle".into(), "ellipse".into()]);
    shapes.dedup();
    if shapes.is_empty() {
        return Err(Error::InvalidConfig("shape list is empty".into()));
    }

    let mut members = Vec::new();
    for shape in &shapes {
        for &aspect in &aspects {
            let spec = match shape.as_str() {
                "rectangle" => DomainSpec::Box { sides: vec![aspect, 1.0] },
                "ellipse" => DomainSpec::Ellipse { center: [0.0, 0.0], a: aspect / 2.0, b: 0.5 },
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown sweep shape {other:?} (expected rectangle or ellipse)"
                    )))
                }
            };
            let h = resolve_h(cfg, &spec)?;
            members.push((shape.clone(), aspect, spec, h));
        }
    }

    let solved = ordered_parallel(&members, cfg.threads(), |_, (shape, aspect, spec, h)| {
        let r = spectral_product(spec, *h)?;
        let bounds = check_all(&r, spec, None);
        let meas = measurements_for(spec).expect("sweep members are planar convex");
        Ok::<ConvexCase, Error>(ConvexCase {
            shape: shape.clone(),
            aspect: *aspect,
            width: meas.width,
            diameter: meas.diameter,
            chord: meas.chord,
            h: *h,
            companion_h: r.companion_h,
            live_nodes: r.live_nodes,
            lambda1: r.lambda1,
            lambda_error: r.lambda_error,
            sup_norm: r.sup_norm,
            sup_error: r.sup_error,
            product: r.product,
            product_error: r.product_error,
            error_estimate: r.error_estimate,
            bounds,
        })
    });
    let mut cases = Vec::new();
    for s in solved {
        cases.push(s?);
    }

    let tol = cfg.tolerance_factor();
    let slab = std::f64::consts::PI * std::f64::consts::PI / 8.0;
    let mut trends = Vec::new();
    for shape in &shapes {
        let mut family: Vec<&ConvexCase> = cases.iter().filter(|c| &c.shape == shape).collect();
        family.sort_by(|a, b| a.aspect.partial_cmp(&b.aspect).unwrap());
        let mut monotone = true;
        for w in family.windows(2) {
            let allow = tol * (w[0].error_estimate * w[0].product + w[1].error_estimate * w[1].product);
            if !(w[1].product < w[0].product + allow) {
                monotone = false;
            }
        }
        let last = family.last().unwrap();
        println!(
            "convex-sweep {}: product {:.6} -> {:.6} across aspect {}..{}, {} toward the slab value {:.6} (gap {:+.2e})",
            shape,
            family.first().unwrap().product,
            last.product,
            family.first().unwrap().aspect,
            last.aspect,
            if monotone { "monotone" } else { "NOT MONOTONE" },
            slab,
            (last.product - slab) / slab
        );
        trends.push(ConvexTrend {
            shape: shape.clone(),
            monotone_decreasing: monotone,
            final_product: last.product,
            slab_gap: (last.product - slab) / slab,
        });
    }

    let mut w = BufWriter::new(File::create(out_path(cfg, "convex_sweep.csv")?)?);
    writeln!(
        w,
        "shape,aspect,width,diameter,chord,h,companionH,liveNodes,lambda1,lambdaError,supNorm,supError,product,productError,errorEstimate,slabLower,elongationUpper,chordEigenCubed,chordEigenLinear,widthTorsion,windowUpper,sharpUpper,toleranceFactor,seed,version"
    )?;
    for c in &cases {
        writeln!(
            w,
            "{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{},{},{},{},{},{},{},{},{}",
            c.shape,
            c.aspect,
            c.width,
            c.diameter,
            c.chord,
            c.h,
            c.companion_h,
            c.live_nodes,
            c.lambda1,
            c.lambda_error,
            c.sup_norm,
            c.sup_error,
            c.product,
            c.product_error,
            c.error_estimate,
            entry_flag(&c.bounds, "convex-product-lower"),
            entry_flag(&c.bounds, "convex-product-upper"),
            entry_flag(&c.bounds, "convex-eigen-upper-cubed"),
            entry_flag(&c.bounds, "convex-eigen-upper-linear"),
            entry_flag(&c.bounds, "convex-torsion-upper"),
            entry_flag(&c.bounds, "product-window-upper"),
            entry_flag(&c.bounds, "product-window-sharp-upper"),
            tol,
            cfg.seed(),
            VERSION
        )?;
    }
    drop(w);

    let labelled: Vec<(String, &BoundReport)> = cases
        .iter()
        .map(|c| (format!("{}-{}", c.shape, c.aspect), &c.bounds))
        .collect();
    write_bound_csv(&out_path(cfg, "convex_bounds.csv")?, &labelled, tol, cfg.seed())?;

    let any_bound_failure = cases.iter().any(|c| !c.bounds.failures().is_empty());
    let all_monotone = trends.iter().all(|t| t.monotone_decreasing);
    let report = ConvexSweepReport {
        shapes,
        aspects,
        slab_product: slab,
        cases,
        trends,
        tolerance_factor: tol,
        seed: cfg.seed(),
        version: VERSION,
    };
    write_json(&out_path(cfg, "convex_sweep.json")?, &report)?;

    if any_bound_failure || !all_monotone {
        Ok(RunStatus::BoundFailure)
    } else {
        Ok(RunStatus::Clean)
    }
}

struct Solved {
    n: usize,
    delta: f64,
    h: f64,
    spec: DomainSpec,
    result: SpectralResult,
    mu1: f64,
    mu1_error: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct PerforatedCaseReport {
    n: usize,
    delta: f64,
    h: f64,
    companion_h: f64,
    live_nodes: usize,
    mu1: f64,
    mu1_error: f64,
    lambda1: f64,
    lambda_error: f64,
    sup_norm: f64,
    sup_error: f64,
    product: f64,
    product_error: f64,
    error_estimate: f64,
    bounds: BoundReport,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct PerforatedSweepReport {
    m: usize,
    alpha: f64,
    side: f64,
    cases: Vec<PerforatedCaseReport>,
    square_product: f64,
    square_product_error: f64,
    product_strictly_decreasing: bool,
    all_below_square: bool,
    /// Smallest prefactor of the N^(-1/3) ceiling covering every measured
    /// product; empirical, binding at one case by construction.
    rate_constant: Option<f64>,
    truncation: Option<String>,
    sharpness_statement: String,
    tolerance_factor: f64,
    seed: u64,
    version: &'static str,
}

/// The why-no-sharpness note for the report, assembled from what the data
/// actually did so the text never contradicts the numbers beside it.
fn sharpness_statement(strictly_decreasing: bool, all_below_square: bool) -> String {
    let mut s = String::from(
        "The critical hole radius shrinks exponentially with the per-axis hole count, so no \
         desk-scale grid reaches products within an arbitrarily small distance of the floor 1. \
         This run demonstrates the regime instead: every product stays above the floor and \
         under the fitted N^(-1/3) decay ceiling, and the closed-form cell-coupling ceilings \
         are checked wherever their regime preconditions hold.",
    );
    if strictly_decreasing {
        s.push_str(" The product falls strictly with N across the swept cases.");
    } else {
        s.push_str(
            " The product does not fall strictly with N at these small counts: an odd N \
             places a hole at the domain centre, suppressing the torsion peak, while an even \
             N leaves the centre cell open, so parity breaks monotonicity between adjacent \
             counts; the decay ceiling still covers every point.",
        );
    }
    if !all_below_square {
        s.push_str(
            " At least one fat-hole member sits above the unperforated square's product: at \
             small N the critical radius is large enough that the eigenvalue gain outweighs \
             the sup-norm loss.",
        );
    }
    s
}

/// Cubes with N^m holes of the critical radius, one row per N: full-domain
/// spectra, unit-cell eigenvalue, and every cell-coupling check. The family
/// cannot reach products arbitrarily close to 1 on a finite grid (the
/// critical radius decays exponentially in N), so the run demonstrates the
/// trend instead and says so in the report.
pub fn run_perforated_sweep(cfg: &ExperimentConfig) -> Result<RunStatus> {
    let m = cfg.m.unwrap_or(2);
    let alpha = cfg.alpha.unwrap_or(4.0 / 3.0);
    let side = cfg.side.unwrap_or(1.0);
    let configured: Vec<PerforatedCase> = cfg.cases.clone().unwrap_or_else(|| {
        [2, 3, 4, 6].iter().map(|&n| PerforatedCase { n, delta: None }).collect()
    });
    if configured.is_empty() {
        return Err(Error::InvalidConfig("perforated case list is empty".into()));
    }

    // Resolve radii and pre-validate resolvability for every member before
    // any solve; the first unresolvable member truncates the sweep there.
    let mut members: Vec<(usize, f64, DomainSpec, f64)> = Vec::new();
    let mut truncation: Option<String> = None;
    for case in &configured {
        let delta = match case.delta {
            Some(d) => d,
            None => critical_hole_radius(m, alpha, case.n, side)?.radius,
        };
        let spec = make_perforated_cube(m, side, case.n, delta)?;
        let h = resolve_h(cfg, &spec)?;
        // Narrowest feature needs 8 cells across, the same rule the grid
        // builder enforces; applied up front so no partial sweep is solved.
        let needed = spec.min_feature().map_or(f64::INFINITY, |f| f / 8.0);
        if h > needed * (1.0 + 1e-12) {
            let kept = members
                .last()
                .map_or_else(|| "none".to_string(), |(n, ..)| n.to_string());
            truncation = Some(format!(
                "N = {} needs h <= {:.6e} but h = {:.6e} is configured; sweep stops at N = {kept}",
                case.n, needed, h
            ));
            break;
        }
        members.push((case.n, delta, spec, h));
    }
    if members.is_empty() {
        return Err(Error::InvalidConfig(
            truncation.unwrap_or_else(|| "no resolvable perforated cases".into()),
        ));
    }
    if let Some(note) = &truncation {
        println!("warning: {note}");
    }

    let solved = ordered_parallel(&members, cfg.threads(), |_, (n, delta, spec, h)| {
        let result = spectral_product(spec, *h)?;
        let DomainSpec::PerforatedCube(p) = spec else { unreachable!() };
        let (mu1, mu1_error) = unit_cell_mu1(p, *h)?;
        Ok::<Solved, Error>(Solved {
            n: *n,
            delta: *delta,
            h: *h,
            spec: spec.clone(),
            result,
            mu1,
            mu1_error,
        })
    });
    let mut cases: Vec<Solved> = Vec::new();
    for s in solved {
        cases.push(s?);
    }

    // Fit the decay prefactor as the smallest constant covering every
    // measured product, then judge each case against the fitted ceiling.
    let best = cases
        .iter()
        .map(|c| (c.result.product - 1.0) * (c.n as f64).cbrt() / 2.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let rate_constant = (best > 0.0 && best.is_finite()).then_some(best);

    let reports: Vec<BoundReport> = cases
        .iter()
        .map(|c| {
            let aux = PerforatedAux {
                mu1: c.mu1,
                mu1_error: c.mu1_error,
                highdim_constant: None,
                rate_constant,
            };
            check_scalars(
                c.result.lambda1,
                c.result.sup_norm,
                c.result.product,
                c.result.error_estimate,
                c.result.h_effective.iter().cloned().fold(0.0, f64::max),
                &c.spec,
                Some(&aux),
            )
        })
        .collect();

    // Reference row: the unperforated square of the same side.
    let square = DomainSpec::Box { sides: vec![side, side] };
    let square_result = spectral_product(&square, side / 128.0)?;

    let tol = cfg.tolerance_factor();
    let mut strictly_decreasing = true;
    for w in cases.windows(2) {
        let (a, b) = (&w[0].result, &w[1].result);
        let allow = tol * (a.error_estimate * a.product + b.error_estimate * b.product);
        if !(b.product < a.product + allow) {
            strictly_decreasing = false;
        }
    }
    let all_below_square = cases.iter().all(|c| c.result.product < square_result.product);

    for (c, rep) in cases.iter().zip(&reports) {
        let failures = rep.failures().len();
        println!(
            "perforated-sweep N = {}: delta {:.6e}, product {:.6} (rel err {:.1e}), mu1 {:.4} (rel err {:.1e}), {} live nodes, {} bound failures",
            c.n, c.delta, c.result.product, c.result.error_estimate, c.mu1, c.mu1_error,
            c.result.live_nodes, failures
        );
    }
    println!(
        "perforated-sweep: square reference {:.6}; decreasing {}; all below square {}; fitted decay prefactor {:?}",
        square_result.product, strictly_decreasing, all_below_square, rate_constant
    );

    let mut w = BufWriter::new(File::create(out_path(cfg, "perforated_sweep.csv")?)?);
    writeln!(
        w,
        "n,delta,h,companionH,liveNodes,mu1,mu1Error,lambda1,lambdaError,supNorm,supError,product,productError,errorEstimate,cellWindowLower,cellWindowUpper,cellEigen,cellTorsion,cellProduct,rateCeiling,toleranceFactor,seed,version"
    )?;
    for (c, rep) in cases.iter().zip(&reports) {
        writeln!(
            w,
            "{},{:.12e},{:.12e},{:.12e},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{},{},{},{},{},{},{},{}",
            c.n,
            c.delta,
            c.h,
            c.result.companion_h,
            c.result.live_nodes,
            c.mu1,
            c.mu1_error,
            c.result.lambda1,
            c.result.lambda_error,
            c.result.sup_norm,
            c.result.sup_error,
            c.result.product,
            c.result.product_error,
            c.result.error_estimate,
            entry_flag(rep, "cell-window-lower"),
            entry_flag(rep, "cell-window-upper"),
            entry_flag(rep, "cell-eigen-upper"),
            entry_flag(rep, "cell-torsion-upper"),
            entry_flag(rep, "cell-product-upper"),
            entry_flag(rep, "product-rate-upper"),
            tol,
            cfg.seed(),
            VERSION
        )?;
    }
    drop(w);

    let labelled: Vec<(String, &BoundReport)> = cases
        .iter()
        .zip(&reports)
        .map(|(c, rep)| (domain_label(&c.spec), rep))
        .collect();
    write_bound_csv(&out_path(cfg, "perforated_bounds.csv")?, &labelled, tol, cfg.seed())?;

    // The square comparison is reported but does not drive the exit status:
    // it is narrative context (how far the family has fallen), not one of
    // the sweep's contracted inequalities, and small N with fat holes can
    // legitimately sit above the square.
    let any_bound_failure = reports.iter().any(|r| !r.failures().is_empty());
    let case_reports: Vec<PerforatedCaseReport> = cases
        .into_iter()
        .zip(reports)
        .map(|(c, bounds)| PerforatedCaseReport {
            n: c.n,
            delta: c.delta,
            h: c.h,
            companion_h: c.result.companion_h,
            live_nodes: c.result.live_nodes,
            mu1: c.mu1,
            mu1_error: c.mu1_error,
            lambda1: c.result.lambda1,
            lambda_error: c.result.lambda_error,
            sup_norm: c.result.sup_norm,
            sup_error: c.result.sup_error,
            product: c.result.product,
            product_error: c.result.product_error,
            error_estimate: c.result.error_estimate,
            bounds,
        })
        .collect();

    let report = PerforatedSweepReport {
        m,
        alpha,
        side,
        cases: case_reports,
        square_product: square_result.product,
        square_product_error: square_result.error_estimate,
        product_strictly_decreasing: strictly_decreasing,
        all_below_square,
        rate_constant,
        truncation,
        sharpness_statement: sharpness_statement(strictly_decreasing, all_below_square),
        tolerance_factor: tol,
        seed: cfg.seed(),
        version: VERSION,
    };
    write_json(&out_path(cfg, "perforated_sweep.json")?, &report)?;

    if any_bound_failure || !strictly_decreasing {
        Ok(RunStatus::BoundFailure)
    } else {
        Ok(RunStatus::Clean)
    }
}
