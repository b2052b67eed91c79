//! Command line front end: parse flags, load the config file, hand off to
//! the experiment runner, and map the outcome onto the exit-code contract
//! (0 clean, 1 a checked bound failed, 2 configuration or solver error).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use torsionlab_cli::config::ExperimentConfig;
use torsionlab_cli::{run, RunStatus};

#[derive(Parser)]
#[command(
    name = "torsionlab",
    version,
    about = "Torsion function, principal Dirichlet eigenvalue, and spectral-product experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve -Lap v = 1 on one domain; report sup norm and a probe value.
    Torsion(Common),
    /// Principal Dirichlet eigenvalue of one domain.
    Eig(Common),
    /// Both solves plus every closed-form bound that applies to the domain.
    Product(Common),
    /// Rectangles and ellipses across aspect ratios.
    #[command(name = "convex-sweep")]
    ConvexSweep(Common),
    /// Cube-with-holes family across hole counts at the critical radius.
    #[command(name = "perforated-sweep")]
    PerforatedSweep(Common),
    /// Solve a corpus (or replay stored measurements) and audit all bounds.
    #[command(name = "verify-bounds")]
    VerifyBounds(Common),
    /// Walk-on-spheres exit-time estimate at a probe point.
    Wos(Common),
    /// Heat-semigroup survival integral at a probe point.
    Survival(Common),
    /// Grid vs walk vs survival agreement table over a small corpus.
    #[command(name = "oracle-check")]
    OracleCheck(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment description (JSON); omitted fields fall back to defaults.
    config: Option<PathBuf>,
    /// Grid step override.
    #[arg(long)]
    h: Option<f64>,
    /// RNG seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweep members and walk batches.
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Torsion(c) => ("torsion", c),
            Command::Eig(c) => ("eig", c),
            Command::Product(c) => ("product", c),
            Command::ConvexSweep(c) => ("convex-sweep", c),
            Command::PerforatedSweep(c) => ("perforated-sweep", c),
            Command::VerifyBounds(c) => ("verify-bounds", c),
            Command::Wos(c) => ("wos", c),
            Command::Survival(c) => ("survival", c),
            Command::OracleCheck(c) => ("oracle-check", c),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = cli.command.parts();

    let mut cfg = match &common.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(cfg) => cfg,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => ExperimentConfig::default(),
    };
    if let Some(tag) = cfg.experiment.as_deref() {
        if tag != name {
            eprintln!("error: config file is tagged for experiment {tag:?} but the subcommand is {name:?}");
            return ExitCode::from(2);
        }
    }
    cfg.apply_overrides(common.h, common.seed, common.out.clone(), common.threads);

    match run(name, &cfg) {
        Ok(RunStatus::Clean) => ExitCode::SUCCESS,
        Ok(RunStatus::BoundFailure) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
