//! Far-field MUSIC on the compressed array, with central-subarray smoothing.

use num_complex::Complex64;

use super::spectrum::{invert_power, pick_peaks, Axis, SpectrumGrid};
use super::subspace::{decompose_matrix, SubspaceDecomposition};
use crate::array::{ff_entries_into, ArrayConfig};
use crate::coupling::selection_matrix;
use crate::signal::{sample_covariance, SnapshotBlock};
use crate::{Error, Result};

/// Stage-1 pseudo-spectrum and the decomposition it came from.
#[derive(Debug, Clone)]
pub struct Stage1Spectrum {
    pub spectrum: SpectrumGrid,
    pub decomposition: SubspaceDecomposition,
}

fn far_field_spectrum(
    decomposition: &SubspaceDecomposition,
    config: &ArrayConfig,
    first_element: usize,
    angle_grid_deg: &[f64],
) -> Result<SpectrumGrid> {
    let mut steering = vec![Complex64::new(0.0, 0.0); decomposition.dimension()];
    let values = angle_grid_deg
        .iter()
        .map(|&deg| {
            ff_entries_into(deg.to_radians(), config, first_element, &mut steering);
            invert_power(decomposition.noise_power(&steering))
        })
        .collect();
    SpectrumGrid::new(vec![Axis::new("angle_deg", angle_grid_deg.to_vec())], values)
}

/// `F·R̂·F^H`, its decomposition, and the far-field MUSIC spectrum over the
/// central `M - 2·trim` rows.
pub fn stage1_spectrum(
    block: &SnapshotBlock,
    trim: usize,
    source_count: usize,
    angle_grid_deg: &[f64],
) -> Result<Stage1Spectrum> {
    let m = block.element_count();
    let selection = selection_matrix(m, trim)?;
    if selection.rows() <= source_count {
        return Err(Error::InvalidConfig(format!(
            "{source_count} sources need more than {} central elements",
            selection.rows()
        )));
    }
    let covariance = sample_covariance(block);
    let smoothed = selection.compress(&covariance.matrix);
    let decomposition = decompose_matrix(&smoothed, source_count)?;
    let spectrum = far_field_spectrum(&decomposition, &block.config, trim, angle_grid_deg)?;
    Ok(Stage1Spectrum { spectrum, decomposition })
}

/// Coarse angles (radians) as the `K` strongest separated spectrum peaks.
pub fn coarse_angles(spectrum: &SpectrumGrid, source_count: usize, min_separation_deg: f64) -> Result<Vec<f64>> {
    match pick_peaks(spectrum, source_count, min_separation_deg) {
        Ok(peaks) => Ok(peaks.into_iter().map(f64::to_radians).collect()),
        Err(Error::UnderResolved { expected, found }) => Err(Error::UnderResolved {
            expected,
            found: found.into_iter().map(f64::to_radians).collect(),
        }),
        Err(e) => Err(e),
    }
}

pub fn stage1_music(
    block: &SnapshotBlock,
    trim: usize,
    source_count: usize,
    angle_grid_deg: &[f64],
    min_separation_deg: f64,
) -> Result<(SpectrumGrid, Vec<f64>)> {
    let out = stage1_spectrum(block, trim, source_count, angle_grid_deg)?;
    let angles = coarse_angles(&out.spectrum, source_count, min_separation_deg)?;
    Ok((out.spectrum, angles))
}

/// Conventional far-field MUSIC on the full, unsmoothed covariance.
pub fn baseline_ff_music(block: &SnapshotBlock, source_count: usize, angle_grid_deg: &[f64]) -> Result<SpectrumGrid> {
    let covariance = sample_covariance(block);
    let decomposition = decompose_matrix(&covariance.matrix, source_count)?;
    far_field_spectrum(&decomposition, &block.config, 0, angle_grid_deg)
}
