use num_complex::Complex64;

use crate::signal::CovarianceEstimate;
use crate::{CMat, Error, Result};

/// Eigen-split of a covariance into signal and noise subspaces.
#[derive(Debug, Clone)]
pub struct SubspaceDecomposition {
    pub signal_basis: CMat,
    pub noise_basis: CMat,
    /// All eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

impl SubspaceDecomposition {
    pub fn dimension(&self) -> usize {
        self.noise_basis.nrows()
    }

    pub fn source_count(&self) -> usize {
        self.signal_basis.ncols()
    }

    /// `‖U_n^H·a‖² = a^H·U_n·U_n^H·a`, evaluated as `‖a‖² - ‖U_s^H·a‖²` since
    /// the signal subspace is the smaller one.
    pub fn noise_power(&self, a: &[Complex64]) -> f64 {
        debug_assert_eq!(a.len(), self.dimension());
        let total: f64 = a.iter().map(Complex64::norm_sqr).sum();
        let signal: f64 = self
            .signal_basis
            .column_iter()
            .map(|u| {
                u.iter()
                    .zip(a)
                    .fold(Complex64::new(0.0, 0.0), |acc, (ui, ai)| acc + ui.conj() * ai)
                    .norm_sqr()
            })
            .sum();
        (total - signal).max(0.0)
    }

    /// `T^H·U_n·U_n^H·T`, exactly Hermitian.
    pub fn noise_gram(&self, t: &CMat) -> CMat {
        let projected = self.signal_basis.adjoint() * t;
        let g = t.adjoint() * t - projected.adjoint() * projected;
        (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
    }
}

pub fn decompose(covariance: &CovarianceEstimate, source_count: usize) -> Result<SubspaceDecomposition> {
    decompose_matrix(&covariance.matrix, source_count)
}

pub fn decompose_matrix(matrix: &CMat, source_count: usize) -> Result<SubspaceDecomposition> {
    let dim = matrix.nrows();
    if source_count == 0 || source_count >= dim {
        return Err(Error::InvalidConfig(format!(
            "source count {source_count} must lie in 1..{dim} for a {dim}x{dim} covariance"
        )));
    }
    let eig = matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    let signal = eigenvalues[source_count - 1];
    let noise = eigenvalues[source_count];
    if (signal - noise).abs() <= 1e-8 * signal.abs().max(noise.abs()) {
        return Err(Error::DegenerateSubspace { signal, noise });
    }

    let pick = |indices: &[usize]| {
        let columns: Vec<_> = indices.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
        CMat::from_columns(&columns)
    };
    Ok(SubspaceDecomposition {
        signal_basis: pick(&order[..source_count]),
        noise_basis: pick(&order[source_count..]),
        eigenvalues,
    })
}
