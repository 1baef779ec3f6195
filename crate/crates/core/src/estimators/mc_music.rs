//! Rank-reduction MUSIC that is blind to a banded complex-symmetric coupling
//! matrix on the extended array.
//!
//! For `C_e` symmetric Toeplitz with band `P`, `C_e·a = T·c` where
//! `c = [1, c_1, …, c_P]` and column `q` of `T` is `a` shifted up plus shifted
//! down by `q` (zero-padded). At a true source the noise projection of `T`
//! loses rank, so the smallest eigenvalue of `Q = T^H·U_n·U_n^H·T` vanishes.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::spectrum::invert_power;
use super::stage2::{refine_with, PassStep, Refinement, SearchWindow};
use super::subspace::SubspaceDecomposition;
use crate::array::{esg_entries_into, ArrayConfig};
use crate::{CMat, Error, Result};

/// `T(θ, r)` of size `M × (P+1)`.
pub fn coupling_manifold(angle: f64, range: f64, band: usize, config: &ArrayConfig) -> Result<CMat> {
    let m = config.element_count();
    let mut a = vec![Complex64::new(0.0, 0.0); m];
    esg_entries_into(angle, range, config, &mut a)?;
    Ok(manifold_from(&a, band))
}

fn manifold_from(a: &[Complex64], band: usize) -> CMat {
    let m = a.len();
    CMat::from_fn(m, band + 1, |i, q| {
        if q == 0 {
            return a[i];
        }
        let up = if i + q < m { a[i + q] } else { Complex64::new(0.0, 0.0) };
        let down = if i >= q { a[i - q] } else { Complex64::new(0.0, 0.0) };
        up + down
    })
}

/// Eigenvalues of `Q(θ, r)`, ascending.
pub fn rank_reduction_eigenvalues(
    decomposition: &SubspaceDecomposition,
    angle: f64,
    range: f64,
    band: usize,
    config: &ArrayConfig,
) -> Result<Vec<f64>> {
    let t = coupling_manifold(angle, range, band, config)?;
    Ok(q_eigenvalues(decomposition, &t))
}

fn q_eigenvalues(decomposition: &SubspaceDecomposition, t: &CMat) -> Vec<f64> {
    let q: DMatrix<Complex64> = decomposition.noise_gram(t);
    let mut values: Vec<f64> = q.symmetric_eigen().eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// `1 / λ_min(T^H·U_n·U_n^H·T)`.
pub fn mc_music_spectrum(
    decomposition: &SubspaceDecomposition,
    angle: f64,
    range: f64,
    band: usize,
    config: &ArrayConfig,
) -> Result<f64> {
    if band == 0 {
        return Err(Error::InvalidConfig("rank-reduction MUSIC needs a coupling band >= 1".into()));
    }
    let values = rank_reduction_eigenvalues(decomposition, angle, range, band, config)?;
    Ok(invert_power(values[0].max(0.0)))
}

/// Windowed coarse-to-fine maximization of [`mc_music_spectrum`].
pub fn mc_music_refine(
    decomposition: &SubspaceDecomposition,
    coarse_angle: f64,
    initial_range: f64,
    window: SearchWindow,
    passes: &[PassStep],
    band: usize,
    config: &ArrayConfig,
) -> Result<Refinement> {
    if band == 0 {
        return Err(Error::InvalidConfig("rank-reduction MUSIC needs a coupling band >= 1".into()));
    }
    let mut a = vec![Complex64::new(0.0, 0.0); config.element_count()];
    refine_with(coarse_angle, initial_range, window, passes, |theta, r| {
        esg_entries_into(theta, r, config, &mut a)?;
        let values = q_eigenvalues(decomposition, &manifold_from(&a, band));
        Ok(invert_power(values[0].max(0.0)))
    })
}
