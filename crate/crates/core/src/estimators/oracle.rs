//! Exhaustive 2D MUSIC over a full (angle, range) grid. Slow; used as the
//! reference the two-stage search is checked against.

use num_complex::Complex64;

use super::spectrum::{Axis, SpectrumGrid};
use super::stage2::esg_music;
use super::subspace::SubspaceDecomposition;
use crate::array::ArrayConfig;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct OracleOutput {
    /// Angle axis in degrees, range axis in wavelengths.
    pub spectrum: SpectrumGrid,
    /// `(angle rad, range)` sorted by angle.
    pub peaks: Vec<(f64, f64)>,
    /// Grid indices of each peak, same order as `peaks`.
    pub cells: Vec<(usize, usize)>,
}

pub fn oracle_2d_music(
    decomposition: &SubspaceDecomposition,
    source_count: usize,
    angle_grid_deg: &[f64],
    range_grid: &[f64],
    config: &ArrayConfig,
    min_separation_deg: f64,
) -> Result<OracleOutput> {
    let mut scratch = vec![Complex64::new(0.0, 0.0); config.element_count()];
    let mut values = Vec::with_capacity(angle_grid_deg.len() * range_grid.len());
    for &deg in angle_grid_deg {
        for &r in range_grid {
            values.push(esg_music(decomposition, config, deg.to_radians(), r, &mut scratch)?);
        }
    }
    let spectrum = SpectrumGrid::new(
        vec![Axis::new("angle_deg", angle_grid_deg.to_vec()), Axis::new("range", range_grid.to_vec())],
        values,
    )?;
    let cells = local_maxima(&spectrum, source_count, min_separation_deg);
    let peaks: Vec<(f64, f64)> =
        cells.iter().map(|&(i, j)| (angle_grid_deg[i].to_radians(), range_grid[j])).collect();
    if peaks.len() < source_count {
        return Err(Error::UnderResolved { expected: source_count, found: peaks.iter().map(|p| p.0).collect() });
    }
    Ok(OracleOutput { spectrum, peaks, cells })
}

/// Strict 8-neighbour maxima (grid edges allowed), strongest first, with a
/// minimum angular separation; returned sorted by angle.
fn local_maxima(spectrum: &SpectrumGrid, count: usize, min_separation_deg: f64) -> Vec<(usize, usize)> {
    let (rows, cols) = spectrum.shape();
    let mut candidates = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let v = spectrum.at(i, j);
            let is_max = (i.saturating_sub(1)..=(i + 1).min(rows - 1)).all(|a| {
                (j.saturating_sub(1)..=(j + 1).min(cols - 1)).all(|b| (a, b) == (i, j) || spectrum.at(a, b) < v)
            });
            if is_max {
                candidates.push((i, j));
            }
        }
    }
    candidates.sort_by(|&a, &b| spectrum.at(b.0, b.1).total_cmp(&spectrum.at(a.0, a.1)).then(a.cmp(&b)));
    let angles = &spectrum.axes[0].values;
    let mut accepted: Vec<(usize, usize)> = Vec::with_capacity(count);
    for cell in candidates {
        if accepted.len() == count {
            break;
        }
        if accepted.iter().all(|c| (angles[c.0] - angles[cell.0]).abs() >= min_separation_deg) {
            accepted.push(cell);
        }
    }
    accepted.sort();
    accepted
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::SourceTruth;
    use crate::coupling::CouplingModel;
    use crate::estimators::spectrum::linear_grid;
    use crate::estimators::subspace::decompose;
    use crate::signal::{generate_snapshots_extended, sample_covariance, Scenario};

    fn run(sources: Vec<SourceTruth>) -> (OracleOutput, Vec<f64>, Vec<f64>) {
        let k = sources.len();
        let s = Scenario {
            sources,
            compressed: ArrayConfig::with_scale(8, 0.2).unwrap(),
            extended: ArrayConfig::with_scale(8, 2.0).unwrap(),
            coupling: CouplingModel::default(),
            extended_band: 0,
            snapshots: 100,
            snr_db: f64::INFINITY,
            seed: 1,
        };
        let block = generate_snapshots_extended(&s, 0, false).unwrap();
        let d = decompose(&sample_covariance(&block), k).unwrap();
        let angles = linear_grid(-60.0, 60.0, 0.5);
        let ranges = linear_grid(5.0, 100.0, 0.5);
        (oracle_2d_music(&d, k, &angles, &ranges, &s.extended, 1.0).unwrap(), angles, ranges)
    }

    #[test]
    fn single_source_global_max() {
        let (out, angles, ranges) = run(vec![SourceTruth::from_degrees(12.5, 30.0, 1.0).unwrap()]);
        assert_eq!(out.cells, vec![out.spectrum.argmax()]);
        assert_eq!(angles[out.cells[0].0], 12.5);
        assert_eq!(ranges[out.cells[0].1], 30.0);
    }

    #[test]
    fn noiseless_two_sources_on_grid() {
        let (out, _, _) = run(vec![
            SourceTruth::from_degrees(-20.0, 15.0, 1.0).unwrap(),
            SourceTruth::from_degrees(25.0, 40.0, 1.0).unwrap(),
        ]);
        let deg: Vec<_> = out.peaks.iter().map(|p| (p.0.to_degrees(), p.1)).collect();
        assert!((deg[0].0 + 20.0).abs() < 1e-9 && deg[0].1 == 15.0, "{deg:?}");
        assert!((deg[1].0 - 25.0).abs() < 1e-9 && deg[1].1 == 40.0, "{deg:?}");
    }
}
