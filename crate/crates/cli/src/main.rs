use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sfas_core::estimators::Refiner;
use sfas_core::harness::{
    load_experiment, run_campaign, run_crb_sweep, run_single_shot, run_validation, write_campaign, write_crb,
    write_validation, Experiment,
};
use sfas_core::signal::Precision;

#[derive(Parser)]
#[command(name = "sfas", version, about = "Two-stage mixed-field source localization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One trial with every intermediate spectrum dumped to CSV.
    SingleShot {
        #[command(flatten)]
        common: Common,
        /// Trial index to simulate.
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Use rank-reduction refinement with this coupling band.
        #[arg(long)]
        mc_band: Option<usize>,
        /// Also export the raw snapshot blocks in binary form.
        #[arg(long, value_enum)]
        snapshots: Option<SnapshotPrecision>,
    },
    /// Monte-Carlo RMSE sweep with CRB overlay.
    Campaign {
        #[command(flatten)]
        common: Common,
    },
    /// CRB curves over the configured sweep, no simulation.
    Crb {
        #[command(flatten)]
        common: Common,
    },
    /// Checks the configuration and the numerical invariants of a scenario.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario or campaign TOML file.
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SnapshotPrecision {
    F32,
    F64,
}

impl Common {
    fn experiment(&self) -> sfas_core::Result<Experiment> {
        let mut experiment = load_experiment(&self.config)?;
        if let Some(seed) = self.seed {
            experiment.seed = seed;
        }
        if let Some(trials) = self.trials {
            experiment.trials = trials;
        }
        experiment.validate()?;
        Ok(experiment)
    }
}

fn listing(out: &Path, files: &[String]) {
    for f in files.iter().chain(std::iter::once(&"manifest.json".to_string())) {
        println!("  {}", out.join(f).display());
    }
}

fn run(cli: Cli) -> sfas_core::Result<bool> {
    let start = Instant::now();
    let ok = match cli.command {
        Command::SingleShot { common, trial, mc_band, snapshots } => {
            let experiment = common.experiment()?;
            let refiner = mc_band.map_or(Refiner::Music, |band| Refiner::RankReduction { band });
            let precision = snapshots.map(|p| match p {
                SnapshotPrecision::F32 => Precision::Complex64,
                SnapshotPrecision::F64 => Precision::Complex128,
            });
            let report = run_single_shot(&experiment, trial, refiner, precision, &common.out)?;
            if let Some(estimate) = &report.estimate {
                for (k, s) in estimate.sources.iter().enumerate() {
                    println!(
                        "source {}: coarse {:.3} deg, refined ({:.4} deg, {:.3} λ){}",
                        k + 1,
                        s.coarse_angle.to_degrees(),
                        s.refined_angle.to_degrees(),
                        s.refined_range,
                        if s.flat_range { " [flat range spectrum]" } else { "" }
                    );
                }
            }
            for e in &report.errors {
                eprintln!("warning: {e}");
            }
            println!("wrote bundle to {}", common.out.display());
            true
        }
        Command::Campaign { common } => {
            let experiment = common.experiment()?;
            let result = run_campaign(&experiment, common.threads)?;
            let manifest = write_campaign(&result, &experiment, &common.out)?;
            let failed = result.trials.iter().filter(|t| t.outcome.is_err()).count();
            println!("{} trial runs, {failed} failed", result.trials.len());
            listing(&common.out, &manifest.files);
            true
        }
        Command::Crb { common } => {
            let experiment = common.experiment()?;
            let records = run_crb_sweep(&experiment)?;
            let manifest = write_crb(&records, &experiment, &common.out)?;
            listing(&common.out, &manifest.files);
            true
        }
        Command::Validate { common } => {
            let experiment = common.experiment()?;
            let checks = run_validation(&experiment)?;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            write_validation(&checks, &experiment, &common.out)?;
            checks.iter().all(|c| c.passed)
        }
    };
    eprintln!("done in {:.1} s", start.elapsed().as_secs_f64());
    Ok(ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
