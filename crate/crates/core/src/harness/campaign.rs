//! Monte-Carlo RMSE campaigns and CRB sweeps.
//!
//! Trials are independent given `(seed, trial index)`; they may run on any
//! number of workers, are collected in index order, and every reduction runs
//! sequentially over that order, so outputs do not depend on the thread count.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{EstimatorKind, Experiment, SweepAxis};
use super::output::{fmt_f64, provenance_lines, write_csv, write_json, Manifest};
use crate::array::ArrayConfig;
use crate::crb::{crb_sources, NoiseKnowledge};
use crate::estimators::{
    baseline_angles, decompose, localize, oracle_2d_music, pair_estimates, EstimatorSettings, Refiner,
};
use crate::signal::{generate_snapshots_extended, sample_covariance, Scenario};
use crate::{Error, Result};

/// Signed errors for one true source in one trial. Angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SourceError {
    pub coarse_angle_deg: Option<f64>,
    pub angle_deg: f64,
    pub range: Option<f64>,
    pub flat_range: bool,
    pub boundary_hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub sweep_value: Option<f64>,
    pub trial: u64,
    pub estimator: EstimatorKind,
    /// Per true source, or the failure message.
    pub outcome: std::result::Result<Vec<SourceError>, String>,
}

/// Aggregate over the successful trials of one sweep point and estimator;
/// `source == None` pools every source.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseRecord {
    pub sweep_value: Option<f64>,
    pub estimator: EstimatorKind,
    pub source: Option<usize>,
    pub coarse_angle_rmse_deg: Option<f64>,
    pub angle_rmse_deg: Option<f64>,
    pub range_rmse: Option<f64>,
    pub range_rmse_normalized: Option<f64>,
    pub successes: usize,
    pub failures: usize,
    /// Successful trials whose range entered the range RMSE (flat range
    /// spectra are scored on angle only).
    pub range_samples: usize,
}

/// Standard-deviation bounds (degrees, wavelengths) for one source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrbRecord {
    pub sweep_value: Option<f64>,
    pub array: CrbArray,
    pub source: usize,
    pub angle_std_deg: Option<f64>,
    pub range_std: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CrbArray {
    Extended,
    Baseline,
}

impl CrbArray {
    pub fn name(self) -> &'static str {
        match self {
            CrbArray::Extended => "crb_extended",
            CrbArray::Baseline => "crb_baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignResult {
    pub sweep: SweepAxis,
    pub records: Vec<RmseRecord>,
    pub crb: Vec<CrbRecord>,
    pub trials: Vec<TrialRecord>,
}

fn sweep_value(axis: SweepAxis, v: f64) -> Option<f64> {
    (axis != SweepAxis::None).then_some(v)
}

/// Runs one estimator on one trial and scores it against the truth.
pub fn run_trial(
    scenario: &Scenario,
    trial: u64,
    kind: EstimatorKind,
    settings: &EstimatorSettings,
    mc_band: usize,
) -> Result<Vec<SourceError>> {
    let truth = &scenario.sources;
    match kind {
        EstimatorKind::TwoStage | EstimatorKind::TwoStageMc => {
            let refiner = if kind == EstimatorKind::TwoStage {
                Refiner::Music
            } else {
                Refiner::RankReduction { band: mc_band }
            };
            let out = localize(scenario, trial, settings, refiner)?;
            let est = &out.estimate.sources;
            let pairing = pair_estimates(&out.estimate.refined(), truth)?;
            Ok(pairing
                .assignment
                .iter()
                .enumerate()
                .map(|(k, &e)| SourceError {
                    coarse_angle_deg: Some((est[e].coarse_angle - truth[k].angle).to_degrees()),
                    angle_deg: pairing.angle_errors[k].to_degrees(),
                    range: Some(pairing.range_errors[k]),
                    flat_range: est[e].flat_range,
                    boundary_hit: est[e].boundary_hit,
                })
                .collect())
        }
        EstimatorKind::BaselineFfMusic => {
            let (_, angles) = baseline_angles(scenario, trial, settings)?;
            let estimates: Vec<(f64, f64)> = angles?.into_iter().map(|a| (a, f64::NAN)).collect();
            let pairing = pair_estimates(&estimates, truth)?;
            Ok(pairing
                .angle_errors
                .iter()
                .map(|&a| SourceError {
                    coarse_angle_deg: None,
                    angle_deg: a.to_degrees(),
                    range: None,
                    flat_range: false,
                    boundary_hit: false,
                })
                .collect())
        }
        EstimatorKind::Oracle2d => {
            let block = generate_snapshots_extended(scenario, trial, true)?;
            let d = decompose(&sample_covariance(&block), truth.len())?;
            let out = oracle_2d_music(
                &d,
                truth.len(),
                &settings.angle_grid.values(),
                &settings.range_grid.values(),
                &block.config,
                settings.min_peak_separation_deg,
            )?;
            let pairing = pair_estimates(&out.peaks, truth)?;
            Ok((0..truth.len())
                .map(|k| SourceError {
                    coarse_angle_deg: None,
                    angle_deg: pairing.angle_errors[k].to_degrees(),
                    range: Some(pairing.range_errors[k]),
                    flat_range: false,
                    boundary_hit: false,
                })
                .collect())
        }
    }
}

fn rms(sum_sq: f64, n: usize) -> Option<f64> {
    (n > 0).then(|| (sum_sq / n as f64).sqrt())
}

/// RMSE records for one sweep point and estimator, per source then pooled.
pub fn aggregate(
    sweep_value: Option<f64>,
    estimator: EstimatorKind,
    scenario: &Scenario,
    trials: &[&TrialRecord],
) -> Vec<RmseRecord> {
    let k = scenario.source_count();
    let successes: Vec<&Vec<SourceError>> = trials.iter().filter_map(|t| t.outcome.as_ref().ok()).collect();
    let failures = trials.len() - successes.len();
    let record = |sources: &[usize]| {
        let (mut coarse, mut coarse_n) = (0.0, 0);
        let (mut angle, mut angle_n) = (0.0, 0);
        let (mut range, mut range_norm, mut range_n) = (0.0, 0.0, 0);
        for errors in &successes {
            for &s in sources {
                let e = errors[s];
                if let Some(c) = e.coarse_angle_deg {
                    coarse += c * c;
                    coarse_n += 1;
                }
                angle += e.angle_deg * e.angle_deg;
                angle_n += 1;
                if let (Some(r), false) = (e.range, e.flat_range) {
                    range += r * r;
                    let rel = r / scenario.sources[s].range;
                    range_norm += rel * rel;
                    range_n += 1;
                }
            }
        }
        RmseRecord {
            sweep_value,
            estimator,
            source: Some(sources[0]),
            coarse_angle_rmse_deg: rms(coarse, coarse_n),
            angle_rmse_deg: rms(angle, angle_n),
            range_rmse: rms(range, range_n),
            range_rmse_normalized: rms(range_norm, range_n),
            successes: successes.len(),
            failures,
            range_samples: range_n / sources.len().max(1),
        }
    };
    let mut out: Vec<RmseRecord> = (0..k).map(|s| record(&[s])).collect();
    let all: Vec<usize> = (0..k).collect();
    out.push(RmseRecord { source: None, ..record(&all) });
    out
}

/// CRB standard deviations on the extended and baseline arrays (uncoupled model).
pub fn crb_records(sweep_value: Option<f64>, scenario: &Scenario) -> Vec<CrbRecord> {
    let arrays: [(CrbArray, ArrayConfig); 2] =
        [(CrbArray::Extended, scenario.extended), (CrbArray::Baseline, scenario.baseline())];
    let mut out = Vec::new();
    for (array, config) in arrays {
        let Ok(bounds) = crb_sources(
            &scenario.sources,
            &config,
            scenario.noise_variance(),
            scenario.snapshots,
            NoiseKnowledge::Known,
        ) else {
            continue;
        };
        for (source, b) in bounds.iter().enumerate() {
            out.push(CrbRecord {
                sweep_value,
                array,
                source,
                angle_std_deg: b.angle.std().map(f64::to_degrees),
                range_std: b.range.std(),
            });
        }
    }
    out
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

pub fn run_campaign(experiment: &Experiment, threads: Option<usize>) -> Result<CampaignResult> {
    let points = experiment.sweep_points()?;
    let axis = experiment.campaign.sweep;
    let settings = &experiment.estimator;
    let mc_band = experiment.mc_band();
    let pool = pool(threads)?;
    let mut records = Vec::new();
    let mut crb = Vec::new();
    let mut trials = Vec::new();
    for (value, scenario) in &points {
        let value = sweep_value(axis, *value);
        for &kind in &experiment.campaign.estimators {
            let batch: Vec<TrialRecord> = pool.install(|| {
                (0..experiment.trials as u64)
                    .into_par_iter()
                    .map(|t| TrialRecord {
                        sweep_value: value,
                        trial: t,
                        estimator: kind,
                        outcome: run_trial(scenario, t, kind, settings, mc_band).map_err(|e| e.to_string()),
                    })
                    .collect()
            });
            let refs: Vec<&TrialRecord> = batch.iter().collect();
            records.extend(aggregate(value, kind, scenario, &refs));
            trials.extend(batch);
        }
        crb.extend(crb_records(value, scenario));
    }
    Ok(CampaignResult { sweep: axis, records, crb, trials })
}

pub const RMSE_HEADER: [&str; 6] = ["sweep_axis", "sweep_value", "estimator", "source", "metric", "value"];

fn opt(value: Option<f64>) -> String {
    value.map(fmt_f64).unwrap_or_default()
}

fn source_label(source: Option<usize>) -> String {
    source.map(|s| (s + 1).to_string()).unwrap_or_else(|| "all".into())
}

fn rmse_rows(result: &CampaignResult) -> Vec<[String; 6]> {
    let axis = result.sweep.name().to_string();
    let mut rows = Vec::new();
    for r in &result.records {
        let base = |metric: &str, value: String| {
            [axis.clone(), opt(r.sweep_value), r.estimator.name().into(), source_label(r.source), metric.into(), value]
        };
        let metrics = [
            ("coarse_angle_rmse_deg", r.coarse_angle_rmse_deg),
            ("angle_rmse_deg", r.angle_rmse_deg),
            ("range_rmse", r.range_rmse),
            ("range_rmse_normalized", r.range_rmse_normalized),
        ];
        for (name, value) in metrics {
            if let Some(v) = value {
                rows.push(base(name, fmt_f64(v)));
            }
        }
        rows.push(base("successes", r.successes.to_string()));
        rows.push(base("failures", r.failures.to_string()));
        let total = r.successes + r.failures;
        rows.push(base("failure_rate", fmt_f64(r.failures as f64 / total.max(1) as f64)));
    }
    rows.extend(crb_rows(axis.as_str(), &result.crb));
    rows
}

fn crb_rows(axis: &str, crb: &[CrbRecord]) -> Vec<[String; 6]> {
    let mut rows = Vec::new();
    for c in crb {
        let unbounded = |v: Option<f64>| v.map(fmt_f64).unwrap_or_else(|| "inf".into());
        for (metric, value) in [("angle_std_deg", c.angle_std_deg), ("range_std", c.range_std)] {
            rows.push([
                axis.to_string(),
                opt(c.sweep_value),
                c.array.name().into(),
                (c.source + 1).to_string(),
                metric.into(),
                unbounded(value),
            ]);
        }
    }
    rows
}

pub const TRIAL_HEADER: [&str; 11] = [
    "sweep_value",
    "trial",
    "estimator",
    "source",
    "status",
    "coarse_angle_error_deg",
    "angle_error_deg",
    "range_error",
    "flat_range",
    "boundary_hit",
    "message",
];

const CRB_NOTE: &str = "CRB rows are computed for the uncoupled model (C = I) with known noise variance";
const FLAT_NOTE: &str = "range RMSE excludes trials whose range spectrum was flagged flat (scored on angle only)";

/// Writes `rmse.csv`, `trials.csv` and `manifest.json` into `out`.
pub fn write_campaign(result: &CampaignResult, experiment: &Experiment, out: &Path) -> Result<Manifest> {
    let mut comments = provenance_lines(experiment)?;
    comments.push(format!("note: {CRB_NOTE}"));
    write_csv(&out.join("rmse.csv"), &comments, &RMSE_HEADER, |w| {
        for row in rmse_rows(result) {
            w.write_record(&row)?;
        }
        Ok(())
    })?;
    write_csv(&out.join("trials.csv"), &comments, &TRIAL_HEADER, |w| {
        for t in &result.trials {
            match &t.outcome {
                Ok(errors) => {
                    for (s, e) in errors.iter().enumerate() {
                        w.write_record([
                            opt(t.sweep_value),
                            t.trial.to_string(),
                            t.estimator.name().into(),
                            (s + 1).to_string(),
                            "ok".into(),
                            opt(e.coarse_angle_deg),
                            fmt_f64(e.angle_deg),
                            opt(e.range),
                            e.flat_range.to_string(),
                            e.boundary_hit.to_string(),
                            String::new(),
                        ])?;
                    }
                }
                Err(message) => w.write_record([
                    opt(t.sweep_value),
                    t.trial.to_string(),
                    t.estimator.name().into(),
                    String::new(),
                    "failed".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    message.clone(),
                ])?,
            }
        }
        Ok(())
    })?;
    let mut manifest = Manifest::new("campaign", experiment)?;
    manifest.files = vec!["rmse.csv".into(), "trials.csv".into()];
    manifest.notes = vec![CRB_NOTE.into(), FLAT_NOTE.into()];
    let failures: usize = result.records.iter().filter(|r| r.source.is_none()).map(|r| r.failures).sum();
    manifest.summary = Some(serde_json::json!({
        "sweep_axis": result.sweep.name(),
        "sweep_points": experiment.campaign.values.len().max(1),
        "trials_per_point": experiment.trials,
        "failed_trials": failures,
    }));
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// CRB curves over the sweep, without any simulation.
pub fn run_crb_sweep(experiment: &Experiment) -> Result<Vec<CrbRecord>> {
    let axis = experiment.campaign.sweep;
    Ok(experiment
        .sweep_points()?
        .iter()
        .flat_map(|(v, s)| crb_records(sweep_value(axis, *v), s))
        .collect())
}

/// Writes `crb.csv` (same schema as `rmse.csv`) and `manifest.json`.
pub fn write_crb(records: &[CrbRecord], experiment: &Experiment, out: &Path) -> Result<Manifest> {
    let mut comments = provenance_lines(experiment)?;
    comments.push(format!("note: {CRB_NOTE}"));
    write_csv(&out.join("crb.csv"), &comments, &RMSE_HEADER, |w| {
        for row in crb_rows(experiment.campaign.sweep.name(), records) {
            w.write_record(&row)?;
        }
        Ok(())
    })?;
    let mut manifest = Manifest::new("crb", experiment)?;
    manifest.files = vec!["crb.csv".into()];
    manifest.notes = vec![CRB_NOTE.into()];
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
