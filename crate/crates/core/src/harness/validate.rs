//! Numerical invariant checks on one configured scenario.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::Experiment;
use super::output::{provenance_lines, write_csv, write_json, Manifest};
use crate::coupling::{coupling_matrix, decoupling_residual, CouplingSymmetry};
use crate::crb::{fisher_information, NoiseKnowledge};
use crate::estimators::{localize, Refiner};
use crate::signal::{Scenario, Stage};
use crate::Result;

pub const DECOUPLING_TOLERANCE: f64 = 1e-10;
const RANDOM_DRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, detail }
    }
}

fn decoupling_check(scenario: &Scenario, trim: usize, seed: u64) -> Result<Check> {
    let model = scenario.coupling;
    if trim < model.band {
        return Ok(Check::new(
            "decoupling_identity",
            false,
            format!("trim {trim} is below the coupling band {}; the identity does not hold", model.band),
        ));
    }
    let config = &scenario.compressed;
    let truth: Vec<f64> = scenario.sources.iter().map(|s| s.angle).collect();
    let mut worst = decoupling_residual(&truth, config, &model, trim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_DRAWS {
        let angles: Vec<f64> = (0..truth.len()).map(|_| rng.random_range(-1.5..1.5)).collect();
        worst = worst.max(decoupling_residual(&angles, config, &model, trim)?);
    }
    Ok(Check::new(
        "decoupling_identity",
        worst < DECOUPLING_TOLERANCE,
        format!("max residual {worst:.3e} over the true angles and {RANDOM_DRAWS} random draws"),
    ))
}

fn coupling_structure_check(scenario: &Scenario) -> Result<Check> {
    let mut worst = 0.0f64;
    for (stage, config) in [(Stage::Compressed, &scenario.compressed), (Stage::Extended, &scenario.extended)] {
        let model = scenario.stage_coupling(stage);
        let c = coupling_matrix(config, &model)?.entries;
        let m = c.nrows();
        for i in 0..m {
            for j in 0..m {
                let lag = i.abs_diff(j);
                if lag > model.band {
                    worst = worst.max(c[(i, j)].norm());
                    continue;
                }
                let toeplitz = c[(i, j)] - c[(i - i.min(j), j - i.min(j))];
                let mirror = match model.symmetry {
                    CouplingSymmetry::Hermitian => c[(i, j)] - c[(j, i)].conj(),
                    CouplingSymmetry::Symmetric => c[(i, j)] - c[(j, i)],
                };
                worst = worst.max(toeplitz.norm()).max(mirror.norm());
            }
        }
    }
    Ok(Check::new(
        "coupling_structure",
        worst < 1e-12,
        format!("max deviation from banded Toeplitz symmetry {worst:.3e}"),
    ))
}

fn noiseless_check(experiment: &Experiment, scenario: &Scenario) -> Check {
    let noiseless = Scenario { snr_db: f64::INFINITY, ..scenario.clone() };
    let settings = &experiment.estimator;
    let finest = *settings.passes.last().expect("validated settings have passes");
    // Plain MUSIC is biased by residual extended-stage coupling by design.
    let refiner = if scenario.extended_band > 0 {
        Refiner::RankReduction { band: experiment.mc_band() }
    } else {
        Refiner::Music
    };
    match localize(&noiseless, 0, settings, refiner) {
        Ok(run) => {
            let estimates = run.estimate.refined();
            let pairing = match crate::estimators::pair_estimates(&estimates, &noiseless.sources) {
                Ok(p) => p,
                Err(e) => return Check::new("noiseless_recovery", false, e.to_string()),
            };
            let mut passed = true;
            let mut worst_angle = 0.0f64;
            let mut worst_range = 0.0f64;
            for (k, &e) in pairing.assignment.iter().enumerate() {
                let source = &run.estimate.sources[e];
                let angle_err = pairing.angle_errors[k].to_degrees().abs();
                let range_err = pairing.range_errors[k].abs() / source.initial_range;
                worst_angle = worst_angle.max(angle_err);
                worst_range = worst_range.max(range_err);
                passed &= angle_err <= finest.angle_step_deg * (1.0 + 1e-9)
                    && range_err <= finest.range_step_frac * (1.0 + 1e-9);
            }
            Check::new(
                "noiseless_recovery",
                passed,
                format!(
                    "{refiner:?}: worst angle error {worst_angle:.3e} deg (step {}), worst range error {worst_range:.3e} of the initial range (step {})",
                    finest.angle_step_deg, finest.range_step_frac
                ),
            )
        }
        Err(e) => Check::new("noiseless_recovery", false, e.to_string()),
    }
}

fn fisher_check(scenario: &Scenario) -> Check {
    let sigma2 = scenario.noise_variance();
    if sigma2 == 0.0 {
        return Check::new("fisher_information", true, "skipped: noiseless scenario has no finite bound".into());
    }
    match fisher_information(&scenario.sources, &scenario.extended, sigma2, scenario.snapshots, NoiseKnowledge::Known)
    {
        Ok(fim) => {
            let asym = (&fim.matrix - fim.matrix.transpose()).norm() / fim.matrix.norm();
            let finite = fim.variances().iter().filter(|b| b.variance().is_some()).count();
            Check::new(
                "fisher_information",
                asym < 1e-12,
                format!("relative asymmetry {asym:.3e}; {finite} of {} parameters bounded", 2 * scenario.source_count()),
            )
        }
        Err(e) => Check::new("fisher_information", false, e.to_string()),
    }
}

/// Runs every check. Configuration errors abort; numerical failures are reported.
pub fn run_validation(experiment: &Experiment) -> Result<Vec<Check>> {
    let scenario = experiment.scenario()?;
    let trim = experiment.estimator.trim_for(&scenario);
    Ok(vec![
        Check::new("configuration", true, format!("{} sources, M = {}", scenario.source_count(), scenario.compressed.element_count())),
        decoupling_check(&scenario, trim, experiment.seed)?,
        coupling_structure_check(&scenario)?,
        noiseless_check(experiment, &scenario),
        fisher_check(&scenario),
    ])
}

pub fn write_validation(checks: &[Check], experiment: &Experiment, out: &Path) -> Result<Manifest> {
    let comments = provenance_lines(experiment)?;
    write_csv(&out.join("validate.csv"), &comments, &["check", "passed", "detail"], |w| {
        for c in checks {
            w.write_record([c.name.as_str(), if c.passed { "true" } else { "false" }, c.detail.as_str()])?;
        }
        Ok(())
    })?;
    let mut manifest = Manifest::new("validate", experiment)?;
    manifest.files = vec!["validate.csv".into()];
    manifest.summary = Some(serde_json::json!({ "passed": checks.iter().all(|c| c.passed) }));
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
