//! Walk-on-spheres estimate of the torsion function.
//!
//! With generator Δ the expected exit time from a ball of radius r is
//! r²/(2m), and exit times telescope over a chain of maximal balls by the
//! strong Markov property: jump to a uniform point on the sphere of radius
//! r = dist(current, boundary), add r²/(2m), repeat. The chain a.s. reaches
//! any shell around the boundary in finitely many steps, so truncating when
//! r < epsShell leaves a bias of order epsShell (times the boundary gradient
//! of v), never a variance problem.
//!
//! Each walk draws from its own RNG stream keyed by (seed, walk index), so
//! the estimate depends only on those values, not on how walks are scheduled
//! across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::DomainSpec;
use crate::{Error, Result};

/// A walk still above the shell after this many jumps is abandoned and
/// counted in `discarded` instead of poisoning the mean. Interior starts
/// need O(log(1/epsShell)) jumps, three orders of magnitude below this.
pub const WALK_STEP_CAP: u32 = 100_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WosEstimate {
    pub mean: f64,
    /// Sample standard deviation over retained walks divided by sqrt(nWalks).
    pub stderr: f64,
    /// Walks that entered the estimate (requested minus discarded).
    pub n_walks: u64,
    /// Walks abandoned at the step cap.
    pub discarded: u64,
    pub eps_shell: f64,
    pub seed: u64,
    pub mean_steps: f64,
}

/// The shell scale below which geometric detail stops mattering: 1e-4 of the
/// domain diameter.
pub fn default_eps_shell(spec: &DomainSpec) -> f64 {
    1e-4 * spec.diameter_hint()
}

/// Walk-on-spheres estimate of v(x) on a described domain, single-threaded.
pub fn wos_torsion(
    spec: &DomainSpec,
    x: &[f64],
    n_walks: u64,
    eps_shell: f64,
    seed: u64,
) -> Result<WosEstimate> {
    wos_torsion_threads(spec, x, n_walks, eps_shell, seed, 1)
}

/// Same estimator with walks split into `threads` contiguous index ranges.
/// The per-walk streams make every range's partial sum a pure function of the
/// seed, so a fixed thread count gives a fixed result.
pub fn wos_torsion_threads(
    spec: &DomainSpec,
    x: &[f64],
    n_walks: u64,
    eps_shell: f64,
    seed: u64,
    threads: usize,
) -> Result<WosEstimate> {
    if !spec.contains(x)? {
        return Err(Error::OutsideDomain);
    }
    wos_exit_time(|p| spec.distance_unchecked(p), x, n_walks, eps_shell, seed, threads, WALK_STEP_CAP)
}

/// Core estimator over an arbitrary exact distance-to-boundary oracle, for
/// shapes the DomainSpec enumeration does not carry (a ball in m = 3, say:
/// `|p| a - norm(p)`). The oracle must be nonnegative inside and the start
/// point strictly interior; an underestimating oracle stays correct, merely
/// slower.
pub fn wos_exit_time<F>(
    dist: F,
    x: &[f64],
    n_walks: u64,
    eps_shell: f64,
    seed: u64,
    threads: usize,
    step_cap: u32,
) -> Result<WosEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n_walks == 0 {
        return Err(Error::InvalidConfig("walk-on-spheres needs at least one walk".into()));
    }
    if !(eps_shell > 0.0) || !eps_shell.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "absorption shell must be positive and finite, got {eps_shell}"
        )));
    }
    if threads == 0 {
        return Err(Error::InvalidConfig("thread count must be at least 1".into()));
    }
    if x.is_empty() {
        return Err(Error::InvalidConfig("start point has no coordinates".into()));
    }

    let merged = if threads == 1 || n_walks < 2 * threads as u64 {
        walk_range(&dist, x, 0..n_walks, eps_shell, seed, step_cap)
    } else {
        let t = threads as u64;
        let (base, rem) = (n_walks / t, n_walks % t);
        let mut partials: Vec<Partial> = Vec::with_capacity(threads);
        std::thread::scope(|scope| {
            let mut handles = Vec::with_capacity(threads);
            let mut start = 0u64;
            for k in 0..t {
                let len = base + if k < rem { 1 } else { 0 };
                let range = start..start + len;
                start += len;
                let dist = &dist;
                handles.push(scope.spawn(move || walk_range(dist, x, range, eps_shell, seed, step_cap)));
            }
            for handle in handles {
                partials.push(handle.join().expect("walk worker panicked"));
            }
        });
        partials.into_iter().fold(Partial::default(), merge)
    };

    if merged.n == 0 {
        return Err(Error::NonConvergence {
            what: "walk-on-spheres (every walk hit the step cap)".into(),
            iterations: step_cap as usize,
            residual: f64::NAN,
        });
    }
    let n = merged.n as f64;
    let stderr = if merged.n > 1 { (merged.m2 / (n - 1.0)).sqrt() / n.sqrt() } else { 0.0 };
    Ok(WosEstimate {
        mean: merged.mean,
        stderr,
        n_walks: merged.n,
        discarded: merged.discarded,
        eps_shell,
        seed,
        mean_steps: merged.steps as f64 / n,
    })
}

#[derive(Default, Clone, Copy)]
struct Partial {
    n: u64,
    mean: f64,
    m2: f64,
    steps: u64,
    discarded: u64,
}

fn merge(a: Partial, b: Partial) -> Partial {
    if a.n == 0 || b.n == 0 {
        let mut keep = if a.n == 0 { b } else { a };
        keep.discarded = a.discarded + b.discarded;
        keep.steps = a.steps + b.steps;
        return keep;
    }
    let n = a.n + b.n;
    let delta = b.mean - a.mean;
    Partial {
        n,
        mean: a.mean + delta * (b.n as f64 / n as f64),
        m2: a.m2 + b.m2 + delta * delta * (a.n as f64 * b.n as f64 / n as f64),
        steps: a.steps + b.steps,
        discarded: a.discarded + b.discarded,
    }
}

fn walk_range<F>(
    dist: &F,
    x: &[f64],
    range: std::ops::Range<u64>,
    eps_shell: f64,
    seed: u64,
    step_cap: u32,
) -> Partial
where
    F: Fn(&[f64]) -> f64,
{
    let mut acc = Partial::default();
    let mut cur = vec![0.0f64; x.len()];
    let mut dir = vec![0.0f64; x.len()];
    for walk in range {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(walk);
        match one_walk(dist, x, eps_shell, step_cap, &mut rng, &mut cur, &mut dir) {
            Some((time, steps)) => {
                acc.n += 1;
                acc.steps += steps as u64;
                let d = time - acc.mean;
                acc.mean += d / acc.n as f64;
                acc.m2 += d * (time - acc.mean);
            }
            None => acc.discarded += 1,
        }
    }
    acc
}

fn one_walk<F>(
    dist: &F,
    x: &[f64],
    eps_shell: f64,
    step_cap: u32,
    rng: &mut ChaCha8Rng,
    cur: &mut [f64],
    dir: &mut [f64],
) -> Option<(f64, u32)>
where
    F: Fn(&[f64]) -> f64,
{
    let time_per_r2 = 1.0 / (2.0 * x.len() as f64);
    cur.copy_from_slice(x);
    let mut time = 0.0f64;
    let mut steps = 0u32;
    loop {
        let r = dist(cur);
        // The shell test is skipped before the first jump: a walk always
        // takes at least one step, so a shell wider than the whole domain
        // still produces the first ball's exit time rather than zero.
        if steps > 0 && r < eps_shell {
            return Some((time, steps));
        }
        if steps >= step_cap {
            return None;
        }
        time += r * r * time_per_r2;
        // Uniform direction on the sphere via a normalized Gaussian vector;
        // the zero-vector draw has probability zero but would divide by it.
        loop {
            let mut norm2 = 0.0f64;
            for d in dir.iter_mut() {
                *d = rng.sample::<f64, _>(StandardNormal);
                norm2 += *d * *d;
            }
            if norm2 > 1e-280 {
                let scale = r / norm2.sqrt();
                for (c, d) in cur.iter_mut().zip(dir.iter()) {
                    *c += scale * *d;
                }
                break;
            }
        }
        steps += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_matches_the_radial_solution() {
        // v(x) = (1 - |x|^2)/4 on the unit disk. From the exact center every
        // first jump lands on the boundary, so the estimate is 1/4 with no
        // noise; that pins the r²/(2m) constant by itself.
        let spec = DomainSpec::Disk { center: [0.0, 0.0], radius: 1.0 };
        let center = wos_torsion(&spec, &[0.0, 0.0], 20_000, 2e-4, 11).unwrap();
        assert_eq!(center.mean, 0.25);
        assert_eq!(center.stderr, 0.0);
        assert_eq!(center.mean_steps, 1.0);

        // Off center the walk genuinely wanders.
        let x = [0.3, 0.2];
        let expect = (1.0 - (x[0] * x[0] + x[1] * x[1])) / 4.0;
        let est = wos_torsion(&spec, &x, 20_000, 2e-4, 11).unwrap();
        println!(
            "disk {:?}: mean {:.6} expect {:.6} stderr {:.2e} steps {:.1} discarded {}",
            x, est.mean, expect, est.stderr, est.mean_steps, est.discarded
        );
        assert_eq!(est.discarded, 0);
        assert!(est.stderr > 0.0 && est.mean_steps > 3.0);
        assert!((est.mean - expect).abs() <= 3.0 * est.stderr + 1e-3);
    }

    #[test]
    fn ball_center_in_three_dimensions() {
        // Radial solution of -Δv = 1 on B(0; a) in m = 3: v(0) = a²/6. The
        // DomainSpec enumeration has no 3-ball, so this exercises the
        // distance-oracle entry point.
        let a = 0.7f64;
        let dist = |p: &[f64]| a - p.iter().map(|c| c * c).sum::<f64>().sqrt();
        let center = wos_exit_time(dist, &[0.0, 0.0, 0.0], 1000, 1.4e-4, 5, 1, WALK_STEP_CAP).unwrap();
        assert_eq!(center.mean, a * a / 6.0);

        let x = [0.2, 0.1, -0.3];
        let expect = (a * a - x.iter().map(|c| c * c).sum::<f64>()) / 6.0;
        let est = wos_exit_time(dist, &x, 20_000, 1.4e-4, 5, 1, WALK_STEP_CAP).unwrap();
        println!(
            "3-ball {:?}: mean {:.6} expect {:.6} stderr {:.2e} steps {:.1}",
            x, est.mean, expect, est.stderr, est.mean_steps
        );
        assert!(est.stderr > 0.0);
        assert!((est.mean - expect).abs() <= 3.0 * est.stderr + 1e-3);
    }

    #[test]
    fn one_forced_step_is_exact() {
        // Shell at least the radius: the first jump lands on the boundary,
        // so a single walk returns the one-ball exit time r²/4 with no
        // Monte Carlo noise at all.
        let r = 0.8f64;
        let spec = DomainSpec::Disk { center: [1.0, -2.0], radius: r };
        for shell in [r, 2.0 * r] {
            let est = wos_torsion(&spec, &[1.0, -2.0], 1, shell, 123).unwrap();
            assert_eq!(est.mean, r * r / 4.0);
            assert_eq!(est.stderr, 0.0);
            assert_eq!(est.mean_steps, 1.0);
            assert_eq!(est.n_walks, 1);
        }
    }

    #[test]
    fn seeded_runs_are_reproducible_and_thread_count_is_immaterial() {
        let spec = DomainSpec::Box { sides: vec![1.0, 1.0] };
        let x = [0.3, 0.6];
        let a = wos_torsion(&spec, &x, 4000, 1e-4, 42).unwrap();
        let b = wos_torsion(&spec, &x, 4000, 1e-4, 42).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());

        let c = wos_torsion(&spec, &x, 4000, 1e-4, 43).unwrap();
        assert_ne!(a.mean.to_bits(), c.mean.to_bits());

        // Same walks, different accumulation grouping: agreement to rounding.
        let t3 = wos_torsion_threads(&spec, &x, 4000, 1e-4, 42, 3).unwrap();
        let t3_again = wos_torsion_threads(&spec, &x, 4000, 1e-4, 42, 3).unwrap();
        println!("1 thread {:.15} vs 3 threads {:.15}", a.mean, t3.mean);
        assert_eq!(t3.mean.to_bits(), t3_again.mean.to_bits());
        assert!((a.mean - t3.mean).abs() <= 1e-12 * a.mean.abs());
        assert!((a.stderr - t3.stderr).abs() <= 1e-12 * a.stderr);
    }

    #[test]
    fn rejects_bad_arguments() {
        let spec = DomainSpec::Disk { center: [0.0, 0.0], radius: 1.0 };
        assert!(matches!(
            wos_torsion(&spec, &[2.0, 0.0], 10, 1e-4, 0),
            Err(Error::OutsideDomain)
        ));
        assert!(matches!(
            wos_torsion(&spec, &[0.0, 0.0], 0, 1e-4, 0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            wos_torsion(&spec, &[0.0, 0.0], 10, 0.0, 0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            wos_torsion(&spec, &[0.0], 10, 1e-4, 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn step_cap_discards_and_all_discarded_errors() {
        // A square walk never lands exactly on the boundary, so a tiny shell
        // with a tiny cap starves the estimator: first every walk dies, then
        // with a looser cap a mixed population shows up in the counters.
        let spec = DomainSpec::Box { sides: vec![1.0, 1.0] };
        let dist = |p: &[f64]| spec.distance_unchecked(p);
        let starved = wos_exit_time(dist, &[0.5, 0.5], 50, 1e-14, 9, 1, 4);
        assert!(matches!(starved, Err(Error::NonConvergence { .. })));

        let mixed = wos_exit_time(dist, &[0.5, 0.5], 200, 1e-9, 9, 1, 40).unwrap();
        println!("mixed population: retained {} discarded {}", mixed.n_walks, mixed.discarded);
        assert!(mixed.discarded > 0);
        assert_eq!(mixed.n_walks + mixed.discarded, 200);
    }
}
