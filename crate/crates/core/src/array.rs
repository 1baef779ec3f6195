//! Array geometry and steering-vector families.
//!
//! All lengths are in wavelengths and all angles are radians measured from
//! broadside. Element `m` (zero-based) sits at `m * scale * baseline_spacing`,
//! so the first element is the phase and range reference for every model.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{CVec, Error, Result};

/// Default baseline inter-element spacing (half a wavelength).
pub const HALF_WAVELENGTH: f64 = 0.5;

/// A uniform linear array whose spacing is `scale * baseline_spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    element_count: usize,
    baseline_spacing: f64,
    scale: f64,
}

impl ArrayConfig {
    pub fn new(element_count: usize, baseline_spacing: f64, scale: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if element_count < 2 {
            problems.push(format!("element_count must be >= 2 (got {element_count})"));
        }
        if !(baseline_spacing > 0.0 && baseline_spacing.is_finite()) {
            problems.push(format!("baseline_spacing must be > 0 (got {baseline_spacing})"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            problems.push(format!("scale must be > 0 (got {scale})"));
        }
        if problems.is_empty() {
            Ok(Self { element_count, baseline_spacing, scale })
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }

    /// Array with the half-wavelength baseline spacing.
    pub fn with_scale(element_count: usize, scale: f64) -> Result<Self> {
        Self::new(element_count, HALF_WAVELENGTH, scale)
    }

    /// Same element count and baseline, different scaling factor.
    pub fn rescaled(&self, scale: f64) -> Result<Self> {
        Self::new(self.element_count, self.baseline_spacing, scale)
    }

    pub fn element_count(&self) -> usize {
        self.element_count
    }

    pub fn baseline_spacing(&self) -> f64 {
        self.baseline_spacing
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Inter-element spacing `d(α) = α·d0`.
    pub fn spacing(&self) -> f64 {
        self.scale * self.baseline_spacing
    }

    pub fn position(&self, index: usize) -> f64 {
        index as f64 * self.spacing()
    }

    /// `D(α) = (M-1)·α·d0`.
    pub fn aperture(&self) -> f64 {
        self.position(self.element_count - 1)
    }

    pub fn rayleigh_distance(&self) -> f64 {
        rayleigh_distance(self)
    }

    /// Inner boundary of the radiating near-field region, `0.62·sqrt(D³)`.
    pub fn fresnel_lower_bound(&self) -> f64 {
        0.62 * self.aperture().powi(3).sqrt()
    }
}

/// Ground-truth source parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceTruth {
    pub angle: f64,
    pub range: f64,
    pub power: f64,
}

impl SourceTruth {
    pub fn new(angle: f64, range: f64, power: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if !(angle.abs() < FRAC_PI_2) {
            problems.push(format!("angle must lie in (-90°, 90°) (got {:.4}°)", angle.to_degrees()));
        }
        if !(range > 0.0 && range.is_finite()) {
            problems.push(format!("range must be > 0 (got {range})"));
        }
        if !(power > 0.0 && power.is_finite()) {
            problems.push(format!("power must be > 0 (got {power})"));
        }
        if problems.is_empty() {
            Ok(Self { angle, range, power })
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }

    pub fn from_degrees(angle_deg: f64, range: f64, power: f64) -> Result<Self> {
        Self::new(angle_deg.to_radians(), range, power)
    }

    pub fn angle_deg(&self) -> f64 {
        self.angle.to_degrees()
    }

    pub fn esg_steering(&self, config: &ArrayConfig) -> Result<SteeringVector> {
        esg_steering(self.angle, self.range, config)
    }
}

/// Steering vector along with the scale of the configuration it was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub entries: CVec,
    pub config_scale: f64,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn element_positions(config: &ArrayConfig) -> Vec<f64> {
    (0..config.element_count).map(|m| config.position(m)).collect()
}

/// `2·D²/λ` with λ = 1.
pub fn rayleigh_distance(config: &ArrayConfig) -> f64 {
    2.0 * config.aperture().powi(2)
}

/// Exact distance from a source at `(angle, range)` to an element at `position`.
pub fn esg_distance(angle: f64, range: f64, position: f64) -> Result<f64> {
    // (r - p sinθ)² + (p cosθ)² is the law-of-cosines radicand as a sum of squares.
    let along = range - position * angle.sin();
    let across = position * angle.cos();
    let distance = along.hypot(across);
    // Below this the source sits on the element to within rounding.
    let coincident = 1e-12 * (range.abs() + position.abs());
    if distance > coincident && distance.is_finite() {
        Ok(distance)
    } else {
        Err(Error::Domain { angle, range, position })
    }
}

/// `r_m - r`, computed without cancellation for large ranges.
pub(crate) fn esg_path_difference(range: f64, position: f64, sin_angle: f64, distance: f64) -> f64 {
    position * (position - 2.0 * range * sin_angle) / (distance + range)
}

/// Writes ESG steering entries into `out` (length must equal the element count).
pub(crate) fn esg_entries_into(
    angle: f64,
    range: f64,
    config: &ArrayConfig,
    out: &mut [Complex64],
) -> Result<()> {
    debug_assert_eq!(out.len(), config.element_count);
    let sin_angle = angle.sin();
    for (m, slot) in out.iter_mut().enumerate() {
        let p = config.position(m);
        let distance = esg_distance(angle, range, p)?;
        let phase = TAU * esg_path_difference(range, p, sin_angle, distance);
        *slot = Complex64::from_polar(range / distance, phase);
    }
    Ok(())
}

/// Exact spatial geometry steering vector `(r/r_m)·exp(j2π(r_m - r))`.
pub fn esg_steering(angle: f64, range: f64, config: &ArrayConfig) -> Result<SteeringVector> {
    let mut entries = CVec::zeros(config.element_count);
    esg_entries_into(angle, range, config, entries.as_mut_slice())?;
    Ok(SteeringVector { entries, config_scale: config.scale })
}

pub(crate) fn ff_entries_into(angle: f64, config: &ArrayConfig, first: usize, out: &mut [Complex64]) {
    let step = -TAU * config.spacing() * angle.sin();
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = Complex64::from_polar(1.0, step * (first + i) as f64);
    }
}

/// Planar-wavefront steering vector `exp(-j2π·(m-1)·d·sinθ)`.
pub fn ff_steering(angle: f64, config: &ArrayConfig) -> SteeringVector {
    let mut entries = CVec::zeros(config.element_count);
    ff_entries_into(angle, config, 0, entries.as_mut_slice());
    SteeringVector { entries, config_scale: config.scale }
}

/// Second-order (Fresnel) expansion of the spherical wavefront.
pub fn fresnel_steering(angle: f64, range: f64, config: &ArrayConfig) -> SteeringVector {
    let d = config.spacing();
    let linear = -TAU * d * angle.sin();
    let quadratic = PI * d * d * angle.cos().powi(2) / range;
    let entries = CVec::from_fn(config.element_count, |m, _| {
        let m = m as f64;
        Complex64::from_polar(1.0, linear * m + quadratic * m * m)
    });
    SteeringVector { entries, config_scale: config.scale }
}
