//! Experiment files: one TOML document describing the scenario, estimator
//! tunables and (optionally) a Monte-Carlo campaign.
//!
//! Only `seed` and `[[sources]]` are required; everything else has a default,
//! and [`Experiment::to_toml`] writes the fully resolved form back out.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::array::{ArrayConfig, SourceTruth};
use crate::coupling::{CouplingModel, CouplingSymmetry};
use crate::estimators::EstimatorSettings;
use crate::signal::Scenario;
use crate::{Error, Result};

pub const DEFAULT_ELEMENTS: usize = 32;
pub const DEFAULT_COMPRESSED_SCALE: f64 = 0.2;
pub const DEFAULT_EXTENDED_SCALE: f64 = 2.0;
pub const DEFAULT_SNAPSHOTS: usize = 500;
pub const DEFAULT_SNR_DB: f64 = 20.0;
pub const DEFAULT_TRIALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySection {
    pub elements: usize,
    /// Wavelengths.
    pub baseline_spacing: f64,
    pub compressed_scale: f64,
    pub extended_scale: f64,
}

impl Default for ArraySection {
    fn default() -> Self {
        Self {
            elements: DEFAULT_ELEMENTS,
            baseline_spacing: crate::array::HALF_WAVELENGTH,
            compressed_scale: DEFAULT_COMPRESSED_SCALE,
            extended_scale: DEFAULT_EXTENDED_SCALE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingSection {
    pub reference_strength: f64,
    pub decay: f64,
    /// Radians.
    pub phase_offset: f64,
    /// Band of the compressed configuration.
    pub band: usize,
    pub symmetry: CouplingSymmetry,
    /// Residual band in the extended configuration; 0 means none.
    pub extended_band: usize,
}

impl Default for CouplingSection {
    fn default() -> Self {
        let m = CouplingModel::default();
        Self {
            reference_strength: m.reference_strength,
            decay: m.decay,
            phase_offset: m.phase_offset,
            band: m.band,
            symmetry: m.symmetry,
            extended_band: 0,
        }
    }
}

impl CouplingSection {
    pub fn model(&self) -> CouplingModel {
        CouplingModel {
            reference_strength: self.reference_strength,
            decay: self.decay,
            phase_offset: self.phase_offset,
            band: self.band,
            symmetry: self.symmetry,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub angle_deg: f64,
    /// Wavelengths.
    pub range: f64,
    #[serde(default = "unit_power")]
    pub power: f64,
}

fn unit_power() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SnrDb,
    Snapshots,
    None,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::Snapshots => "snapshots",
            SweepAxis::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    TwoStage,
    TwoStageMc,
    BaselineFfMusic,
    Oracle2d,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::TwoStage => "two_stage",
            EstimatorKind::TwoStageMc => "two_stage_mc",
            EstimatorKind::BaselineFfMusic => "baseline_ff_music",
            EstimatorKind::Oracle2d => "oracle_2d",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSection {
    pub sweep: SweepAxis,
    /// Sweep values; snapshot counts must be whole numbers.
    pub values: Vec<f64>,
    pub estimators: Vec<EstimatorKind>,
    /// Coupling band assumed by the rank-reduction refiner; `None` uses
    /// `max(extended_band, 1)`.
    pub mc_band: Option<usize>,
}

impl Default for CampaignSection {
    fn default() -> Self {
        Self { sweep: SweepAxis::None, values: vec![], estimators: vec![EstimatorKind::TwoStage], mc_band: None }
    }
}

/// A fully resolved experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub seed: u64,
    #[serde(default = "default_snr")]
    pub snr_db: f64,
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub array: ArraySection,
    #[serde(default)]
    pub coupling: CouplingSection,
    pub sources: Vec<SourceSection>,
    #[serde(default)]
    pub estimator: EstimatorSettings,
    #[serde(default)]
    pub campaign: CampaignSection,
}

fn default_snr() -> f64 {
    DEFAULT_SNR_DB
}

fn default_snapshots() -> usize {
    DEFAULT_SNAPSHOTS
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

impl Experiment {
    /// Experiment with every default and the given sources.
    pub fn with_sources(seed: u64, sources: &[(f64, f64)]) -> Self {
        Self {
            seed,
            snr_db: DEFAULT_SNR_DB,
            snapshots: DEFAULT_SNAPSHOTS,
            trials: DEFAULT_TRIALS,
            array: ArraySection::default(),
            coupling: CouplingSection::default(),
            sources: sources.iter().map(|&(angle_deg, range)| SourceSection { angle_deg, range, power: 1.0 }).collect(),
            estimator: EstimatorSettings::default(),
            campaign: CampaignSection::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// Every violated invariant, or the simulation scenario.
    pub fn scenario(&self) -> Result<Scenario> {
        let mut problems = Vec::new();
        let a = &self.array;
        let compressed = ArrayConfig::new(a.elements, a.baseline_spacing, a.compressed_scale)
            .map_err(|e| problems.push(format!("compressed array: {e}")))
            .ok();
        let extended = ArrayConfig::new(a.elements, a.baseline_spacing, a.extended_scale)
            .map_err(|e| problems.push(format!("extended array: {e}")))
            .ok();
        if self.sources.is_empty() {
            problems.push("at least one [[sources]] entry is required".into());
        }
        if self.trials == 0 {
            problems.push("trials must be >= 1".into());
        }
        problems.extend(self.estimator.problems());
        problems.extend(self.campaign_problems());
        let (Some(compressed), Some(extended)) = (compressed, extended) else {
            // Geometry-free source checks, which the scenario would otherwise run.
            for (k, s) in self.sources.iter().enumerate() {
                if let Err(e) = SourceTruth::new(s.angle_deg.to_radians(), s.range, s.power) {
                    problems.push(format!("source {}: {e}", k + 1));
                }
            }
            return Err(Error::Validation(problems));
        };
        let scenario = Scenario {
            sources: self
                .sources
                .iter()
                .map(|s| SourceTruth { angle: s.angle_deg.to_radians(), range: s.range, power: s.power })
                .collect(),
            compressed,
            extended,
            coupling: self.coupling.model(),
            extended_band: self.coupling.extended_band,
            snapshots: self.snapshots,
            snr_db: self.snr_db,
            seed: self.seed,
        };
        problems.extend(scenario.problems(self.estimator.trim_for(&scenario)));
        if problems.is_empty() {
            Ok(scenario)
        } else {
            Err(Error::Validation(problems))
        }
    }

    fn campaign_problems(&self) -> Vec<String> {
        let c = &self.campaign;
        let mut problems = Vec::new();
        if c.values.windows(2).any(|w| !(w[1] > w[0])) {
            problems.push("campaign sweep values must be strictly increasing".into());
        }
        match c.sweep {
            SweepAxis::None if !c.values.is_empty() => {
                problems.push("campaign values given without a sweep axis".into())
            }
            SweepAxis::Snapshots if c.values.iter().any(|&v| !(v >= 1.0 && v.fract() == 0.0)) => {
                problems.push("snapshot sweep values must be whole numbers >= 1".into())
            }
            SweepAxis::SnrDb if c.values.iter().any(|v| v.is_nan()) => {
                problems.push("SNR sweep values must be numbers".into())
            }
            _ => {}
        }
        if c.estimators.is_empty() {
            problems.push("campaign needs at least one estimator".into());
        }
        let mut seen = c.estimators.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != c.estimators.len() {
            problems.push("campaign estimators must not repeat".into());
        }
        if c.mc_band == Some(0) {
            problems.push("mc_band must be >= 1".into());
        }
        problems
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario().map(|_| ())
    }

    pub fn mc_band(&self) -> usize {
        self.campaign.mc_band.unwrap_or(self.coupling.extended_band.max(1))
    }

    /// `(sweep value, scenario)` for every sweep point; a single point at the
    /// base scenario when there is no sweep.
    pub fn sweep_points(&self) -> Result<Vec<(f64, Scenario)>> {
        let base = self.scenario()?;
        let c = &self.campaign;
        Ok(match c.sweep {
            SweepAxis::None => vec![(f64::NAN, base)],
            SweepAxis::SnrDb => c.values.iter().map(|&v| (v, Scenario { snr_db: v, ..base.clone() })).collect(),
            SweepAxis::Snapshots => {
                c.values.iter().map(|&v| (v, Scenario { snapshots: v as usize, ..base.clone() })).collect()
            }
        })
    }
}

/// Reads, parses and validates an experiment file.
pub fn load_experiment(path: &Path) -> Result<Experiment> {
    let text = std::fs::read_to_string(path)?;
    let experiment = Experiment::from_toml_str(&text)
        .map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
    experiment.validate()?;
    Ok(experiment)
}

/// The simulation scenario of an experiment file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    load_experiment(path)?.scenario()
}
