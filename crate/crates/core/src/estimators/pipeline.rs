//! The full two-stage estimator and its tunables.

use serde::{Deserialize, Serialize};

use super::mc_music::mc_music_refine;
use super::spectrum::{linear_grid, log_grid, pick_peaks, SpectrumGrid};
use super::stage1::{coarse_angles, stage1_spectrum, baseline_ff_music, Stage1Spectrum};
use super::stage2::{
    default_passes, stage2_range_search, stage2_refine, PassStep, RangeSearch, Refinement, SearchWindow,
    DEFAULT_FLAT_RATIO,
};
use super::subspace::{decompose, SubspaceDecomposition};
use crate::signal::{
    generate_snapshots_baseline, generate_snapshots_compressed, generate_snapshots_extended, sample_covariance,
    Scenario, SnapshotBlock,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl LinearGrid {
    pub fn values(&self) -> Vec<f64> {
        linear_grid(self.start, self.stop, self.step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl LogGrid {
    pub fn values(&self) -> Vec<f64> {
        log_grid(self.start, self.stop, self.points)
    }
}

/// Which objective stage 2 maximizes inside the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refiner {
    /// Plain MUSIC over the spherical manifold.
    Music,
    /// Rank-reduction MUSIC tolerant to a banded symmetric coupling.
    RankReduction { band: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSettings {
    /// Central-subarray trim; `None` uses the compressed coupling band.
    pub trim: Option<usize>,
    pub angle_grid: LinearGrid,
    pub range_grid: LogGrid,
    pub window_angle_deg: f64,
    /// Range half-window as a fraction of the initial range.
    pub window_range_frac: f64,
    pub passes: Vec<PassStep>,
    pub min_peak_separation_deg: f64,
    pub flat_ratio: f64,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            trim: None,
            angle_grid: LinearGrid { start: -90.0, stop: 90.0, step: 0.1 },
            range_grid: LogGrid { start: 5.0, stop: 2e4, points: 200 },
            window_angle_deg: DEFAULT_WINDOW_ANGLE_DEG,
            window_range_frac: DEFAULT_WINDOW_RANGE_FRAC,
            passes: default_passes(),
            min_peak_separation_deg: 1.0,
            flat_ratio: DEFAULT_FLAT_RATIO,
        }
    }
}

/// Wide enough to cover the far-field bias of stage 1 on near-field sources
/// (about 3° for a 30λ source on the compressed array).
pub const DEFAULT_WINDOW_ANGLE_DEG: f64 = 5.0;

/// The 1D range search runs at the coarse angle, and for distant sources a
/// few hundredths of a degree of coarse error move its peak by tens of
/// percent along the angle/range ridge; ±60% keeps the truth inside.
pub const DEFAULT_WINDOW_RANGE_FRAC: f64 = 0.6;

impl EstimatorSettings {
    pub fn trim_for(&self, scenario: &Scenario) -> usize {
        self.trim.unwrap_or(scenario.coupling.band)
    }

    pub fn problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let g = &self.angle_grid;
        if !(g.step > 0.0 && g.start < g.stop && g.start > -90.0 - 1e-9 && g.stop < 90.0 + 1e-9) {
            problems.push(format!("angle grid must be an increasing subset of [-90, 90] (got {g:?})"));
        }
        let r = &self.range_grid;
        if !(r.start > 0.0 && r.start < r.stop && r.points >= 2) {
            problems.push(format!("range grid must be increasing, positive, with >= 2 points (got {r:?})"));
        }
        if !(self.window_angle_deg > 0.0 && self.window_range_frac > 0.0) {
            problems.push("search windows must be positive".into());
        }
        if !(self.window_range_frac < 1.0) {
            problems.push(format!("window_range_frac must be < 1 (got {})", self.window_range_frac));
        }
        if self.passes.is_empty() {
            problems.push("at least one refinement pass is required".into());
        }
        if self.passes.iter().any(|p| !(p.angle_step_deg > 0.0 && p.range_step_frac > 0.0)) {
            problems.push("refinement steps must be positive".into());
        }
        if !(self.min_peak_separation_deg >= 0.0) {
            problems.push("minimum peak separation must be >= 0".into());
        }
        if !(self.flat_ratio >= 1.0) {
            problems.push("flat-spectrum ratio must be >= 1".into());
        }
        problems
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceEstimate {
    /// Radians.
    pub coarse_angle: f64,
    pub initial_range: f64,
    /// Radians.
    pub refined_angle: f64,
    pub refined_range: f64,
    /// Radians.
    pub window_angle: f64,
    pub window_range: f64,
    /// Range spectrum too flat for the range to be trusted.
    pub flat_range: bool,
    pub boundary_hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationEstimate {
    pub sources: Vec<SourceEstimate>,
}

impl LocalizationEstimate {
    pub fn refined(&self) -> Vec<(f64, f64)> {
        self.sources.iter().map(|s| (s.refined_angle, s.refined_range)).collect()
    }

    pub fn coarse(&self) -> Vec<(f64, f64)> {
        self.sources.iter().map(|s| (s.coarse_angle, s.initial_range)).collect()
    }
}

/// Every intermediate product of one two-stage run.
#[derive(Debug, Clone)]
pub struct TwoStageOutput {
    pub stage1: Stage1Spectrum,
    pub extended: SubspaceDecomposition,
    pub range_searches: Vec<RangeSearch>,
    pub refinements: Vec<Refinement>,
    pub estimate: LocalizationEstimate,
}

/// Stage 1 on `compressed`, stage 2 on `extended`.
pub fn two_stage(
    compressed: &SnapshotBlock,
    extended: &SnapshotBlock,
    source_count: usize,
    trim: usize,
    settings: &EstimatorSettings,
    refiner: Refiner,
) -> Result<TwoStageOutput> {
    let stage1 = stage1_spectrum(compressed, trim, source_count, &settings.angle_grid.values())?;
    let coarse = coarse_angles(&stage1.spectrum, source_count, settings.min_peak_separation_deg)?;
    let decomposition = decompose(&sample_covariance(extended), source_count)?;
    let range_grid = settings.range_grid.values();
    let config = &extended.config;

    let mut range_searches = Vec::with_capacity(source_count);
    let mut refinements = Vec::with_capacity(source_count);
    let mut sources = Vec::with_capacity(source_count);
    for &theta in &coarse {
        let search = stage2_range_search(&decomposition, theta, &range_grid, config, settings.flat_ratio)?;
        let window = SearchWindow {
            angle: settings.window_angle_deg.to_radians(),
            range: settings.window_range_frac * search.initial_range,
        };
        let refined = match refiner {
            Refiner::Music => {
                stage2_refine(&decomposition, theta, search.initial_range, window, &settings.passes, config)?
            }
            Refiner::RankReduction { band } => mc_music_refine(
                &decomposition,
                theta,
                search.initial_range,
                window,
                &settings.passes,
                band,
                config,
            )?,
        };
        sources.push(SourceEstimate {
            coarse_angle: theta,
            initial_range: search.initial_range,
            refined_angle: refined.angle,
            refined_range: refined.range,
            window_angle: window.angle,
            window_range: window.range,
            flat_range: search.flat,
            boundary_hit: refined.boundary_hit,
        });
        range_searches.push(search);
        refinements.push(refined);
    }
    Ok(TwoStageOutput {
        stage1,
        extended: decomposition,
        range_searches,
        refinements,
        estimate: LocalizationEstimate { sources },
    })
}

/// Simulates trial `trial` of `scenario` and runs the two-stage estimator.
pub fn localize(scenario: &Scenario, trial: u64, settings: &EstimatorSettings, refiner: Refiner) -> Result<TwoStageOutput> {
    let compressed = generate_snapshots_compressed(scenario, trial)?;
    let extended = generate_snapshots_extended(scenario, trial, true)?;
    two_stage(&compressed, &extended, scenario.source_count(), settings.trim_for(scenario), settings, refiner)
}

/// Conventional far-field MUSIC on the half-wavelength array: spectrum and
/// picked angles (radians), or the failure if fewer than `K` peaks exist.
pub fn baseline_angles(
    scenario: &Scenario,
    trial: u64,
    settings: &EstimatorSettings,
) -> Result<(SpectrumGrid, Result<Vec<f64>>)> {
    let block = generate_snapshots_baseline(scenario, trial)?;
    let spectrum = baseline_ff_music(&block, scenario.source_count(), &settings.angle_grid.values())?;
    let peaks = match pick_peaks(&spectrum, scenario.source_count(), settings.min_peak_separation_deg) {
        Ok(p) => Ok(p.into_iter().map(f64::to_radians).collect()),
        Err(Error::UnderResolved { expected, found }) => {
            Err(Error::UnderResolved { expected, found: found.into_iter().map(f64::to_radians).collect() })
        }
        Err(e) => Err(e),
    };
    Ok((spectrum, peaks))
}
