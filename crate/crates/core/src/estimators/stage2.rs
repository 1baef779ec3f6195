//! Extended-array refinement: 1D range search at each coarse angle, then a
//! windowed coarse-to-fine 2D search over the exact spherical manifold.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spectrum::{invert_power, Axis, SpectrumGrid};
use super::subspace::SubspaceDecomposition;
use crate::array::{esg_entries_into, ArrayConfig};
use crate::{Error, Result};

/// Range spectrum at a fixed angle and its maximizer.
#[derive(Debug, Clone)]
pub struct RangeSearch {
    pub spectrum: SpectrumGrid,
    pub initial_range: f64,
    /// Set when max/median falls below the flatness ratio, i.e. the range is
    /// only weakly identifiable.
    pub flat: bool,
}

pub const DEFAULT_FLAT_RATIO: f64 = 3.0;

pub(crate) fn esg_music(
    decomposition: &SubspaceDecomposition,
    config: &ArrayConfig,
    angle: f64,
    range: f64,
    scratch: &mut [Complex64],
) -> Result<f64> {
    esg_entries_into(angle, range, config, scratch)?;
    Ok(invert_power(decomposition.noise_power(scratch)))
}

pub fn stage2_range_search(
    decomposition: &SubspaceDecomposition,
    coarse_angle: f64,
    range_grid: &[f64],
    config: &ArrayConfig,
    flat_ratio: f64,
) -> Result<RangeSearch> {
    let mut scratch = vec![Complex64::new(0.0, 0.0); config.element_count()];
    let values = range_grid
        .iter()
        .map(|&r| esg_music(decomposition, config, coarse_angle, r, &mut scratch))
        .collect::<Result<Vec<_>>>()?;
    let spectrum = SpectrumGrid::new(vec![Axis::new("range", range_grid.to_vec())], values)?;
    let (best, _) = spectrum.argmax();
    let flat = spectrum.max() < flat_ratio * spectrum.median();
    Ok(RangeSearch { initial_range: range_grid[best], spectrum, flat })
}

/// Half-widths of the local search box around `(coarse angle, initial range)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchWindow {
    /// Radians.
    pub angle: f64,
    pub range: f64,
}

/// One pass of the coarse-to-fine search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassStep {
    pub angle_step_deg: f64,
    /// Range step as a fraction of the initial range.
    pub range_step_frac: f64,
}

pub fn default_passes() -> Vec<PassStep> {
    vec![
        PassStep { angle_step_deg: 0.05, range_step_frac: 0.01 },
        PassStep { angle_step_deg: 0.005, range_step_frac: 0.001 },
        PassStep { angle_step_deg: 0.0005, range_step_frac: 0.0001 },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    /// Radians.
    pub angle: f64,
    pub range: f64,
    pub window: SearchWindow,
    /// The maximizer lies on the window edge, i.e. the window may be too small.
    pub boundary_hit: bool,
}

/// Half-width of each later pass, in steps of the pass before it.
const REFINE_SPAN: f64 = 2.0;

/// Symmetric grid `center + i·step` clipped to `[lo, hi]`, with both bounds included.
fn centered_axis(center: f64, step: f64, lo: f64, hi: f64) -> Vec<f64> {
    let center = center.clamp(lo, hi);
    let below = ((center - lo) / step + 1e-9).floor() as i64;
    let above = ((hi - center) / step + 1e-9).floor() as i64;
    let mut values: Vec<f64> = (-below..=above).map(|i| center + i as f64 * step).collect();
    let tol = 1e-9 * step;
    if values.first().is_none_or(|&v| v - lo > tol) {
        values.insert(0, lo);
    }
    if values.last().is_none_or(|&v| hi - v > tol) {
        values.push(hi);
    }
    values.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
    values.dedup();
    values
}

/// Coarse-to-fine 1D maximization over `[lo, hi]`: the first step covers the
/// interval around `center`, each later step covers `±REFINE_SPAN` previous
/// steps around the running best. Ties keep the earliest point.
fn maximize_1d<F>(center: f64, lo: f64, hi: f64, steps: &[f64], mut f: F) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut best = (center, f64::NEG_INFINITY);
    let (mut a, mut b) = (lo, hi);
    for (i, &step) in steps.iter().enumerate() {
        if i > 0 {
            let span = REFINE_SPAN * steps[i - 1];
            a = (best.0 - span).max(lo);
            b = (best.0 + span).min(hi);
        }
        let start = if i == 0 { center } else { best.0 };
        for x in centered_axis(start, step, a, b) {
            let v = f(x)?;
            if v > best.1 {
                best = (x, v);
            }
        }
    }
    Ok(best)
}

/// Maximizes `objective(angle_rad, range)` over the window.
///
/// Range and angle errors are strongly correlated (the peak is a tilted
/// ridge, long along range for distant sources), so a Cartesian grid tends to
/// pick whichever ridge point happens to fall near a grid node. Instead the
/// range is searched coarse-to-fine on the profile `max_θ objective(θ, r)`,
/// with a nested coarse-to-fine angle search at every range. Later range
/// passes narrow the angle search around the running best angle.
pub(crate) fn refine_with<F>(
    coarse_angle: f64,
    initial_range: f64,
    window: SearchWindow,
    passes: &[PassStep],
    mut objective: F,
) -> Result<Refinement>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    if !(window.angle > 0.0 && window.range > 0.0) {
        return Err(Error::InvalidConfig("search windows must be positive".into()));
    }
    if passes.is_empty() {
        return Err(Error::InvalidConfig("refinement needs at least one pass".into()));
    }
    let angle_lo = coarse_angle - window.angle;
    let angle_hi = coarse_angle + window.angle;
    let range_lo = (initial_range - window.range).max(f64::MIN_POSITIVE);
    let range_hi = initial_range + window.range;
    let angle_steps: Vec<f64> = passes.iter().map(|p| p.angle_step_deg.to_radians()).collect();
    let range_steps: Vec<f64> = passes.iter().map(|p| p.range_step_frac * initial_range).collect();

    // (range, angle, value)
    let mut best = (initial_range, coarse_angle, f64::NEG_INFINITY);
    for pass in 0..passes.len() {
        let (r_lo, r_hi, a_lo, a_hi, a_center) = if pass == 0 {
            (range_lo, range_hi, angle_lo, angle_hi, coarse_angle)
        } else {
            let dr = REFINE_SPAN * range_steps[pass - 1];
            let da = REFINE_SPAN * angle_steps[pass - 1];
            (
                (best.0 - dr).max(range_lo),
                (best.0 + dr).min(range_hi),
                (best.1 - da).max(angle_lo),
                (best.1 + da).min(angle_hi),
                best.1,
            )
        };
        let r_center = if pass == 0 { initial_range } else { best.0 };
        for r in centered_axis(r_center, range_steps[pass], r_lo, r_hi) {
            let (theta, v) = maximize_1d(a_center, a_lo, a_hi, &angle_steps[pass..], |t| objective(t, r))?;
            if v > best.2 {
                best = (r, theta, v);
            }
        }
    }
    let (range, angle, _) = best;
    let edge = |x: f64, lo: f64, hi: f64, step: f64| x - lo < 0.5 * step || hi - x < 0.5 * step;
    let last = passes.len() - 1;
    let boundary_hit = edge(angle, angle_lo, angle_hi, angle_steps[last])
        || edge(range, range_lo, range_hi, range_steps[last]);
    Ok(Refinement { angle, range, window, boundary_hit })
}

/// Cartesian sample of the spherical MUSIC spectrum over a search window,
/// angle axis in degrees.
pub fn window_spectrum(
    decomposition: &SubspaceDecomposition,
    coarse_angle: f64,
    initial_range: f64,
    window: SearchWindow,
    step: PassStep,
    config: &ArrayConfig,
) -> Result<SpectrumGrid> {
    let angles = centered_axis(
        coarse_angle,
        step.angle_step_deg.to_radians(),
        coarse_angle - window.angle,
        coarse_angle + window.angle,
    );
    let ranges = centered_axis(
        initial_range,
        step.range_step_frac * initial_range,
        (initial_range - window.range).max(f64::MIN_POSITIVE),
        initial_range + window.range,
    );
    let mut scratch = vec![Complex64::new(0.0, 0.0); config.element_count()];
    let mut values = Vec::with_capacity(angles.len() * ranges.len());
    for &theta in &angles {
        for &r in &ranges {
            values.push(esg_music(decomposition, config, theta, r, &mut scratch)?);
        }
    }
    SpectrumGrid::new(
        vec![Axis::new("angle_deg", angles.iter().map(|a| a.to_degrees()).collect()), Axis::new("range", ranges)],
        values,
    )
}

/// Localized 2D MUSIC over `[coarse ± Δθ] × [initial ± Δr]`.
pub fn stage2_refine(
    decomposition: &SubspaceDecomposition,
    coarse_angle: f64,
    initial_range: f64,
    window: SearchWindow,
    passes: &[PassStep],
    config: &ArrayConfig,
) -> Result<Refinement> {
    let mut scratch = vec![Complex64::new(0.0, 0.0); config.element_count()];
    refine_with(coarse_angle, initial_range, window, passes, |theta, r| {
        esg_music(decomposition, config, theta, r, &mut scratch)
    })
}
