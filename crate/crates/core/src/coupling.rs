//! Configuration-dependent mutual coupling and central-subarray selection.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{ff_steering, ArrayConfig};
use crate::{CMat, CVec, Error, Result};

/// How the lower triangle of the Toeplitz coupling matrix relates to the upper one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingSymmetry {
    /// `C[i+m, i] = conj(c_m)`.
    #[default]
    Hermitian,
    /// `C[i+m, i] = c_m`, the form under which the coupled steering vector is
    /// linear in the coefficient vector.
    Symmetric,
}

/// Exponentially decaying coupling `c_m(α) = c0·exp(-β·m·α·d0)·exp(j(2π·m·α·d0 + φ0))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingModel {
    pub reference_strength: f64,
    pub decay: f64,
    pub phase_offset: f64,
    /// Number of non-zero off-diagonal lags.
    pub band: usize,
    #[serde(default)]
    pub symmetry: CouplingSymmetry,
}

impl Default for CouplingModel {
    fn default() -> Self {
        Self {
            reference_strength: 0.3,
            decay: 1.0,
            phase_offset: 0.0,
            band: 2,
            symmetry: CouplingSymmetry::Hermitian,
        }
    }
}

impl CouplingModel {
    pub fn none() -> Self {
        Self { reference_strength: 0.0, band: 0, ..Self::default() }
    }

    pub fn with_band(self, band: usize) -> Self {
        Self { band, ..self }
    }

    pub fn with_symmetry(self, symmetry: CouplingSymmetry) -> Self {
        Self { symmetry, ..self }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if !(0.0..1.0).contains(&self.reference_strength) {
            problems.push(format!(
                "coupling reference_strength must lie in [0, 1) (got {})",
                self.reference_strength
            ));
        }
        if !(self.decay > 0.0 && self.decay.is_finite()) {
            problems.push(format!("coupling decay must be > 0 (got {})", self.decay));
        }
        if !self.phase_offset.is_finite() {
            problems.push("coupling phase_offset must be finite".to_string());
        }
        problems
    }

    fn check_against(&self, config: &ArrayConfig) -> Result<()> {
        let mut problems = self.validate();
        if self.band + 1 > config.element_count() {
            problems.push(format!(
                "coupling band {} exceeds M-1 = {}",
                self.band,
                config.element_count() - 1
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }

    /// Coefficient at signed lag `q` as it appears in row `i`, column `i + q`.
    fn signed_lag(&self, coefficients: &[Complex64], q: isize) -> Complex64 {
        let lag = q.unsigned_abs();
        if lag == 0 {
            return Complex64::new(1.0, 0.0);
        }
        let c = coefficients[lag - 1];
        match (q < 0, self.symmetry) {
            (true, CouplingSymmetry::Hermitian) => c.conj(),
            _ => c,
        }
    }
}

pub fn coupling_coefficient(lag: usize, config: &ArrayConfig, model: &CouplingModel) -> Result<Complex64> {
    if lag == 0 {
        return Err(Error::InvalidConfig("lag-0 coupling is fixed to 1".into()));
    }
    if lag >= config.element_count() {
        return Err(Error::InvalidConfig(format!(
            "lag {lag} exceeds M-1 = {}",
            config.element_count() - 1
        )));
    }
    if lag > model.band {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let separation = lag as f64 * config.spacing();
    let magnitude = model.reference_strength * (-model.decay * separation).exp();
    Ok(Complex64::from_polar(magnitude, TAU * separation + model.phase_offset))
}

/// `[c_1, ..., c_P]` for the given configuration.
pub fn coupling_coefficients(config: &ArrayConfig, model: &CouplingModel) -> Result<Vec<Complex64>> {
    model.check_against(config)?;
    (1..=model.band).map(|lag| coupling_coefficient(lag, config, model)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub entries: CMat,
    pub alpha: f64,
}

/// Banded Toeplitz coupling matrix with unit diagonal.
pub fn coupling_matrix(config: &ArrayConfig, model: &CouplingModel) -> Result<CouplingMatrix> {
    let coefficients = coupling_coefficients(config, model)?;
    let m = config.element_count();
    let band = model.band as isize;
    let entries = CMat::from_fn(m, m, |i, j| {
        let q = j as isize - i as isize;
        if q.abs() > band {
            Complex64::new(0.0, 0.0)
        } else {
            model.signed_lag(&coefficients, q)
        }
    });
    Ok(CouplingMatrix { entries, alpha: config.scale() })
}

/// Selects the central `M - 2·trim` elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionMatrix {
    pub trim: usize,
    pub full_size: usize,
}

impl SelectionMatrix {
    pub fn rows(&self) -> usize {
        self.full_size - 2 * self.trim
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows(), self.full_size, |i, j| if j == i + self.trim { 1.0 } else { 0.0 })
    }

    /// `F·x` for a full-length column set.
    pub fn select_rows(&self, matrix: &CMat) -> CMat {
        matrix.rows(self.trim, self.rows()).into_owned()
    }

    /// `F·R·F^H`.
    pub fn compress(&self, covariance: &CMat) -> CMat {
        covariance.view((self.trim, self.trim), (self.rows(), self.rows())).into_owned()
    }
}

pub fn selection_matrix(full_size: usize, trim: usize) -> Result<SelectionMatrix> {
    if full_size < 2 * trim + 2 {
        return Err(Error::InvalidConfig(format!(
            "trim {trim} leaves fewer than 2 of {full_size} elements"
        )));
    }
    Ok(SelectionMatrix { trim, full_size })
}

/// Diagonal of the per-source coupling gain that the central rows absorb.
///
/// Entry k is `Σ_{q=-P..P} C[i, i+q]·exp(-j·q·ω_k)` with `ω_k = 2π·d·sin θ_k`;
/// for symmetric coupling this is `Σ c_|q|·exp(j·q·ω_k)`.
pub fn gamma_matrix(angles: &[f64], model: &CouplingModel, config: &ArrayConfig) -> Result<CVec> {
    let coefficients = coupling_coefficients(config, model)?;
    let band = model.band as isize;
    Ok(CVec::from_iterator(
        angles.len(),
        angles.iter().map(|&theta| {
            let omega = TAU * config.spacing() * theta.sin();
            (-band..=band)
                .map(|q| model.signed_lag(&coefficients, q) * Complex64::from_polar(1.0, -(q as f64) * omega))
                .sum::<Complex64>()
        }),
    ))
}

pub(crate) fn ff_manifold(angles: &[f64], config: &ArrayConfig) -> CMat {
    let columns: Vec<CVec> = angles.iter().map(|&t| ff_steering(t, config).entries).collect();
    if columns.is_empty() {
        CMat::zeros(config.element_count(), 0)
    } else {
        CMat::from_columns(&columns)
    }
}

/// `‖F·C·A_FF - Ã_FF·Γ‖_F`.
pub fn decoupling_residual(angles: &[f64], config: &ArrayConfig, model: &CouplingModel, trim: usize) -> Result<f64> {
    let selection = selection_matrix(config.element_count(), trim)?;
    let coupling = coupling_matrix(config, model)?;
    let manifold = ff_manifold(angles, config);
    let gamma = gamma_matrix(angles, model, config)?;
    let coupled = selection.select_rows(&(&coupling.entries * &manifold));
    let mut decoupled = selection.select_rows(&manifold);
    for (k, mut column) in decoupled.column_iter_mut().enumerate() {
        column *= gamma[k];
    }
    Ok((coupled - decoupled).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cfg(m: usize, scale: f64) -> ArrayConfig {
        ArrayConfig::with_scale(m, scale).unwrap()
    }

    #[test]
    fn coefficient_examples() {
        let zero = CouplingModel { reference_strength: 0.0, ..Default::default() };
        for lag in 1..5 {
            assert_eq!(coupling_coefficient(lag, &cfg(8, 0.2), &zero).unwrap(), Complex64::new(0.0, 0.0));
        }
        let model = CouplingModel { reference_strength: 0.3, decay: 1.0, phase_offset: 0.0, band: 1, ..Default::default() };
        let c1 = coupling_coefficient(1, &cfg(4, 1.0), &model).unwrap();
        let expected = Complex64::from_polar(0.3 * (-0.5f64).exp(), PI);
        assert!((c1 - expected).norm() < 1e-15);
        assert_eq!(coupling_coefficient(2, &cfg(4, 1.0), &model).unwrap(), Complex64::new(0.0, 0.0));
        assert!(coupling_coefficient(0, &cfg(4, 1.0), &model).is_err());
    }

    #[test]
    fn magnitude_decreases_with_lag_and_scale() {
        let model = CouplingModel::default().with_band(5);
        let alphas = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0];
        for lag in 1..=5 {
            let mags: Vec<f64> = alphas
                .iter()
                .map(|&a| coupling_coefficient(lag, &cfg(8, a), &model).unwrap().norm())
                .collect();
            assert!(mags.windows(2).all(|w| w[1] < w[0]), "lag {lag}: {mags:?}");
            // Halving α multiplies the magnitude by exp(β·lag·α·d0/2).
            let ratio = mags[0] / mags[1];
            assert_relative_eq!(ratio, (1.0 * lag as f64 * 0.1 * 0.5).exp(), max_relative = 1e-12);
        }
        for &a in &alphas {
            let mags: Vec<f64> = (1..=5).map(|l| coupling_coefficient(l, &cfg(8, a), &model).unwrap().norm()).collect();
            assert!(mags.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn matrix_shape() {
        let c = coupling_matrix(&cfg(5, 0.2), &CouplingModel::none()).unwrap();
        assert_eq!(c.entries, CMat::identity(5, 5));

        let model = CouplingModel::default().with_band(1);
        let config = cfg(3, 0.2);
        let a = coupling_coefficient(1, &config, &model).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let expected = CMat::from_row_slice(3, 3, &[one, a, zero, a.conj(), one, a, zero, a.conj(), one]);
        assert_eq!(coupling_matrix(&config, &model).unwrap().entries, expected);

        let sym = coupling_matrix(&config, &model.with_symmetry(CouplingSymmetry::Symmetric)).unwrap();
        assert_eq!(sym.entries[(1, 0)], a);
        assert!(coupling_matrix(&config, &CouplingModel::default().with_band(3)).is_err());
    }

    #[test]
    fn default_compressed_coupling_spectrum() {
        let config = cfg(32, 0.2);
        let model = CouplingModel::default();
        let c = coupling_matrix(&config, &model).unwrap();
        let offdiag = &c.entries - CMat::identity(32, 32);
        // Hermitian, so the spectral radius is the largest |eigenvalue|.
        let radius = offdiag.symmetric_eigenvalues().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // Measured fixture. The bound 2(|c1| + |c2|) ≈ 1.034 is approached as M grows,
        // so the default model is not a contraction at this scale.
        assert_relative_eq!(radius, 1.0231637945297523, max_relative = 1e-12);
        assert!(radius < 2.0 * (0.3 * (-0.1f64).exp() + 0.3 * (-0.2f64).exp()));
        // The gain seen by visible directions stays well away from zero.
        let angles: Vec<f64> = (-899..=899).map(|d| (d as f64 * 0.1).to_radians()).collect();
        let gamma = gamma_matrix(&angles, &model, &config).unwrap();
        let min = gamma.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        assert!(min > 0.5, "{min}");
    }

    #[test]
    fn selection_examples() {
        let f = selection_matrix(5, 1).unwrap();
        let dense = f.to_matrix();
        for (i, col) in [1usize, 2, 3].iter().enumerate() {
            assert_eq!(dense[(i, *col)], 1.0);
            assert_eq!(dense.row(i).sum(), 1.0);
        }
        assert_eq!(selection_matrix(4, 0).unwrap().to_matrix(), DMatrix::identity(4, 4));
        assert!(selection_matrix(5, 2).is_err());
        let big = selection_matrix(32, 3).unwrap().to_matrix();
        assert_eq!(&big * big.transpose(), DMatrix::identity(26, 26));
    }

    #[test]
    fn gamma_examples() {
        let config = cfg(8, 1.0);
        let none = CouplingModel { reference_strength: 0.0, ..Default::default() };
        let g = gamma_matrix(&[0.1, -0.4], &none, &config).unwrap();
        assert!(g.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));

        let model = CouplingModel::default().with_band(1);
        let c1 = coupling_coefficient(1, &config, &model).unwrap();
        let g = gamma_matrix(&[0.0], &model, &config).unwrap();
        assert!((g[0] - (1.0 + 2.0 * c1.re)).norm() < 1e-15);

        let sym = model.with_symmetry(CouplingSymmetry::Symmetric);
        let g = gamma_matrix(&[0.0], &sym, &config).unwrap();
        assert!((g[0] - (1.0 + 2.0 * c1)).norm() < 1e-15);

        // Symmetric form equals Σ c_|q| e^{jqω}.
        let config = cfg(16, 0.2);
        let sym = CouplingModel::default().with_symmetry(CouplingSymmetry::Symmetric);
        let theta: f64 = 0.37;
        let omega = PI * 0.2 * theta.sin();
        let coeffs = coupling_coefficients(&config, &sym).unwrap();
        let mut expected = Complex64::new(1.0, 0.0);
        for q in 1..=2 {
            let c = coeffs[q - 1];
            expected += c * Complex64::from_polar(1.0, q as f64 * omega) + c * Complex64::from_polar(1.0, -(q as f64) * omega);
        }
        let g = gamma_matrix(&[theta], &sym, &config).unwrap();
        assert!((g[0] - expected).norm() < 1e-14);
    }

    #[test]
    fn residual_examples() {
        let config = cfg(16, 0.2);
        let angles = [-0.5, 0.1, 0.6];
        assert_eq!(decoupling_residual(&angles, &config, &CouplingModel::none(), 2).unwrap(), 0.0);
        let model = CouplingModel::default().with_symmetry(CouplingSymmetry::Symmetric);
        assert!(decoupling_residual(&angles, &config, &model, 2).unwrap() < 1e-12);
        let broken = decoupling_residual(&angles, &config, &model, 1).unwrap();
        assert!(broken > 1e-3, "{broken}");
    }

    proptest! {
        #[test]
        fn hermitian_toeplitz_banded(
            c0 in 0.0f64..0.95, beta in 0.1f64..3.0, phi in -3.0f64..3.0,
            band in 0usize..6, alpha in 0.05f64..4.0, m in 7usize..20,
        ) {
            let model = CouplingModel { reference_strength: c0, decay: beta, phase_offset: phi, band, symmetry: CouplingSymmetry::Hermitian };
            let c = coupling_matrix(&cfg(m, alpha), &model).unwrap().entries;
            prop_assert_eq!((&c - c.adjoint()).norm(), 0.0);
            for i in 0..m {
                for j in 0..m {
                    if i.abs_diff(j) > band {
                        prop_assert_eq!(c[(i, j)], Complex64::new(0.0, 0.0));
                    }
                    if i > 0 && j > 0 {
                        prop_assert_eq!(c[(i, j)], c[(i - 1, j - 1)]);
                    }
                }
            }
        }

        #[test]
        fn decoupling_identity_holds(
            angles in proptest::collection::vec(-1.4f64..1.4, 1..5),
            c0 in 0.0f64..0.95, beta in 0.1f64..3.0, phi in -3.0f64..3.0,
            band in 0usize..4, extra_trim in 0usize..2, alpha in 0.05f64..1.0,
            symmetric in proptest::bool::ANY,
        ) {
            let symmetry = if symmetric { CouplingSymmetry::Symmetric } else { CouplingSymmetry::Hermitian };
            let model = CouplingModel { reference_strength: c0, decay: beta, phase_offset: phi, band, symmetry };
            let residual = decoupling_residual(&angles, &cfg(16, alpha), &model, band + extra_trim).unwrap();
            prop_assert!(residual < 1e-10, "{}", residual);
        }
    }
}
