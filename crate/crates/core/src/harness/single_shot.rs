//! One trial with every intermediate spectrum written out.

use std::path::Path;

use serde::Serialize;

use super::config::Experiment;
use super::output::{create, provenance_lines, write_json, write_spectrum, Manifest};
use crate::estimators::{
    baseline_angles, pair_estimates, two_stage, window_spectrum, LocalizationEstimate, Refiner, SearchWindow,
};
use crate::signal::{
    generate_snapshots_compressed, generate_snapshots_extended, write_snapshots, Precision,
};
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct TruthEntry {
    pub angle_deg: f64,
    pub range: f64,
    pub power: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SingleShotReport {
    pub trial: u64,
    pub truth: Vec<TruthEntry>,
    pub estimate: Option<LocalizationEstimate>,
    /// Estimate index matched to each true source.
    pub assignment: Option<Vec<usize>>,
    pub angle_errors_deg: Option<Vec<f64>>,
    pub range_errors: Option<Vec<f64>>,
    pub baseline_angles_deg: Option<Vec<f64>>,
    pub errors: Vec<String>,
}

/// Runs trial `trial` and writes its bundle into `out`. Estimator failures are
/// recorded in the report rather than aborting the bundle.
pub fn run_single_shot(
    experiment: &Experiment,
    trial: u64,
    refiner: Refiner,
    snapshots: Option<Precision>,
    out: &Path,
) -> Result<SingleShotReport> {
    let scenario = experiment.scenario()?;
    let settings = &experiment.estimator;
    let comments = provenance_lines(experiment)?;
    let mut files = Vec::new();
    let mut errors = Vec::new();

    let compressed = generate_snapshots_compressed(&scenario, trial)?;
    let extended = generate_snapshots_extended(&scenario, trial, true)?;
    if let Some(precision) = snapshots {
        for (name, block) in [("compressed.snap", &compressed), ("extended.snap", &extended)] {
            write_snapshots(block, precision, create(&out.join(name))?)?;
            files.push(name.to_string());
        }
    }

    let (baseline_spectrum, baseline) = baseline_angles(&scenario, trial, settings)?;
    write_spectrum(&out.join("baseline_spectrum.csv"), &comments, &baseline_spectrum)?;
    files.push("baseline_spectrum.csv".into());
    let baseline_angles_deg = match baseline {
        Ok(a) => Some(a.into_iter().map(f64::to_degrees).collect()),
        Err(e) => {
            errors.push(format!("baseline: {e}"));
            None
        }
    };

    let mut report = SingleShotReport {
        trial,
        truth: truth_entries(experiment),
        estimate: None,
        assignment: None,
        angle_errors_deg: None,
        range_errors: None,
        baseline_angles_deg,
        errors,
    };

    let k = scenario.source_count();
    match two_stage(&compressed, &extended, k, settings.trim_for(&scenario), settings, refiner) {
        Ok(run) => {
            write_spectrum(&out.join("stage1_spectrum.csv"), &comments, &run.stage1.spectrum)?;
            files.push("stage1_spectrum.csv".into());
            for (i, (search, source)) in run.range_searches.iter().zip(&run.estimate.sources).enumerate() {
                let name = format!("range_spectrum_{}.csv", i + 1);
                write_spectrum(&out.join(&name), &comments, &search.spectrum)?;
                files.push(name);
                let patch = window_spectrum(
                    &run.extended,
                    source.coarse_angle,
                    source.initial_range,
                    SearchWindow { angle: source.window_angle, range: source.window_range },
                    settings.passes[0],
                    &extended.config,
                )?;
                let name = format!("refine_patch_{}.csv", i + 1);
                write_spectrum(&out.join(&name), &comments, &patch)?;
                files.push(name);
            }
            match pair_estimates(&run.estimate.refined(), &scenario.sources) {
                Ok(p) => {
                    report.angle_errors_deg = Some(p.angle_errors.iter().map(|e| e.to_degrees()).collect());
                    report.range_errors = Some(p.range_errors);
                    report.assignment = Some(p.assignment);
                }
                Err(e) => report.errors.push(format!("pairing: {e}")),
            }
            report.estimate = Some(run.estimate);
        }
        Err(e) => report.errors.push(format!("two-stage: {e}")),
    }

    write_json(&out.join("estimate.json"), &report)?;
    files.push("estimate.json".into());
    let mut manifest = Manifest::new("single-shot", experiment)?;
    manifest.files = files;
    manifest.notes = vec![
        "angles in estimate.json are radians unless the field name ends in _deg; ranges in wavelengths".into(),
    ];
    manifest.summary = Some(serde_json::json!({ "trial": trial, "failed": !report.errors.is_empty() }));
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(report)
}

fn truth_entries(experiment: &Experiment) -> Vec<TruthEntry> {
    experiment
        .sources
        .iter()
        .map(|s| TruthEntry { angle_deg: s.angle_deg, range: s.range, power: s.power })
        .collect()
}
