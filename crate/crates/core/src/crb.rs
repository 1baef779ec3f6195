//! Stochastic (unconditional) Cramér-Rao bound for joint angle/range
//! estimation under the uncoupled spherical-wavefront model.
//!
//! Model: `x(t) = A(η)·s(t) + n(t)` with `s ~ CN(0, P)`, `n ~ CN(0, σ²·I)`,
//! `η = (θ_1..θ_K, r_1..r_K)`. The Fisher matrix is the Slepian–Bangs form
//! `J_ij = N·tr(R⁻¹·∂_iR·R⁻¹·∂_jR)` over η and the `K²` real parameters of
//! the Hermitian `P` (treated as unknown nuisance). By default `σ²` is known;
//! the bound on η is the inverse of the Schur complement of the nuisance
//! block. With `σ²` also unknown this reduces to the classical closed form
//! `J_η = (2N/σ²)·Re[(D^H·P⊥_A·D) ⊙ (1₂ₓ₂ ⊗ (P·A^H·R⁻¹·A·P)^T)]`, which
//! [`closed_form_fisher`] evaluates independently.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{esg_distance, esg_steering, ArrayConfig, SourceTruth};
use crate::{CMat, CVec, Error, Result};

/// `∂a/∂θ` and `∂a/∂r` of the spherical steering vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringJacobian {
    pub d_angle: CVec,
    pub d_range: CVec,
}

/// Closed-form derivatives of `a_m = (r/ρ_m)·exp(j2π(ρ_m - r))`,
/// `ρ_m² = r² - 2·r·p_m·sinθ + p_m²`, written so that nothing cancels at
/// large range.
pub fn steering_jacobian(source: &SourceTruth, config: &ArrayConfig) -> Result<SteeringJacobian> {
    let a = esg_steering(source.angle, source.range, config)?.entries;
    let (s, c) = source.angle.sin_cos();
    let r = source.range;
    let m = config.element_count();
    let mut d_angle = CVec::zeros(m);
    let mut d_range = CVec::zeros(m);
    for i in 0..m {
        let p = config.position(i);
        let rho = esg_distance(source.angle, r, p)?;
        let along = r - p * s;
        // ∂ρ/∂θ = -r·p·cosθ/ρ; amplitude term is -(1/ρ)·∂ρ/∂θ.
        let drho_dtheta = -r * p * c / rho;
        let log_angle = r * p * c / (rho * rho);
        // ∂ρ/∂r - 1 = (along - ρ)/ρ = -p²cos²θ / (ρ·(along + ρ)).
        let ddelta_dr = -(p * c).powi(2) / (rho * (along + rho));
        // 1/r - along/ρ² = p·(p - r·sinθ) / (r·ρ²).
        let log_range = p * (p - r * s) / (r * rho * rho);
        let tau = std::f64::consts::TAU;
        d_angle[i] = a[i] * Complex64::new(log_angle, tau * drho_dtheta);
        d_range[i] = a[i] * Complex64::new(log_range, tau * ddelta_dr);
    }
    Ok(SteeringJacobian { d_angle, d_range })
}

/// Whether the noise variance is a known constant or an estimated nuisance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKnowledge {
    #[default]
    Known,
    Unknown,
}

/// `2K × 2K` Fisher information on `(θ_1..θ_K, r_1..r_K)` after eliminating
/// the nuisance parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherBlock {
    pub matrix: DMatrix<f64>,
    pub snapshots: usize,
}

/// Variance bound for one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "variance")]
pub enum Bound {
    Finite(f64),
    /// Not identifiable: the Fisher matrix is singular along this parameter,
    /// or the implied standard deviation exceeds the parameter itself.
    Unbounded,
}

impl Bound {
    pub fn variance(self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(v),
            Bound::Unbounded => None,
        }
    }

    pub fn std(self) -> Option<f64> {
        self.variance().map(f64::sqrt)
    }
}

/// Angle bound in rad², range bound in λ².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceBound {
    pub angle: Bound,
    pub range: Bound,
}

fn manifold(sources: &[SourceTruth], config: &ArrayConfig) -> Result<(CMat, CMat)> {
    let k = sources.len();
    let m = config.element_count();
    let mut a = CMat::zeros(m, k);
    let mut d = CMat::zeros(m, 2 * k);
    for (j, s) in sources.iter().enumerate() {
        a.set_column(j, &esg_steering(s.angle, s.range, config)?.entries);
        let jac = steering_jacobian(s, config)?;
        d.set_column(j, &jac.d_angle);
        d.set_column(k + j, &jac.d_range);
    }
    Ok((a, d))
}

fn signal_covariance(sources: &[SourceTruth]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(sources.len(), sources.iter().map(|s| Complex64::new(s.power, 0.0))))
}

fn check_inputs(sources: &[SourceTruth], noise_variance: f64, snapshots: usize) -> Result<()> {
    if sources.is_empty() {
        return Err(Error::InvalidConfig("the bound needs at least one source".into()));
    }
    if !(noise_variance > 0.0 && noise_variance.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "the bound needs a positive finite noise variance (got {noise_variance})"
        )));
    }
    if snapshots == 0 {
        return Err(Error::InvalidConfig("the bound needs at least one snapshot".into()));
    }
    Ok(())
}

/// `N·Re tr(R⁻¹·X·R⁻¹·Y)` given `R⁻¹·X` and `R⁻¹·Y`.
fn trace_product(rx: &CMat, ry: &CMat) -> f64 {
    let n = rx.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (rx[(i, j)] * ry[(j, i)]).re;
        }
    }
    acc
}

/// Full Slepian–Bangs Fisher matrix with nuisance elimination.
pub fn fisher_information(
    sources: &[SourceTruth],
    config: &ArrayConfig,
    noise_variance: f64,
    snapshots: usize,
    noise: NoiseKnowledge,
) -> Result<FisherBlock> {
    check_inputs(sources, noise_variance, snapshots)?;
    let k = sources.len();
    let m = config.element_count();
    let (a, d) = manifold(sources, config)?;
    let p = signal_covariance(sources);
    let r = &a * &p * a.adjoint() + CMat::identity(m, m) * Complex64::new(noise_variance, 0.0);
    let r_inv = r.try_inverse().ok_or(Error::SingularFisher)?;
    let pa_h = &p * a.adjoint();

    let mut derivatives: Vec<CMat> = Vec::new();
    for j in 0..2 * k {
        let src = j % k;
        let dcol = d.column(j);
        let term = dcol * pa_h.row(src);
        derivatives.push(&term + term.adjoint());
    }
    let j_unit = Complex64::new(0.0, 1.0);
    for kk in 0..k {
        derivatives.push(a.column(kk) * a.column(kk).adjoint());
        for l in kk + 1..k {
            let x = a.column(kk) * a.column(l).adjoint();
            derivatives.push(&x + x.adjoint());
            let y = &x * j_unit;
            derivatives.push(&y + y.adjoint());
        }
    }
    if noise == NoiseKnowledge::Unknown {
        derivatives.push(CMat::identity(m, m));
    }

    let scaled: Vec<CMat> = derivatives.iter().map(|dr| &r_inv * dr).collect();
    let n = scaled.len();
    let mut full = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = snapshots as f64 * trace_product(&scaled[i], &scaled[j]);
            full[(i, j)] = v;
            full[(j, i)] = v;
        }
    }
    let e = 2 * k;
    let j_ee = full.view((0, 0), (e, e)).into_owned();
    let j_en = full.view((0, e), (e, n - e)).into_owned();
    let j_nn = full.view((e, e), (n - e, n - e)).into_owned();
    let j_nn_inv = j_nn.clone().try_inverse().ok_or(Error::SingularFisher)?;
    let schur = &j_ee - &j_en * j_nn_inv * j_en.transpose();
    Ok(FisherBlock { matrix: symmetrize(schur), snapshots })
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Classical closed form (noise variance estimated).
pub fn closed_form_fisher(
    sources: &[SourceTruth],
    config: &ArrayConfig,
    noise_variance: f64,
    snapshots: usize,
) -> Result<FisherBlock> {
    check_inputs(sources, noise_variance, snapshots)?;
    let k = sources.len();
    let m = config.element_count();
    let (a, d) = manifold(sources, config)?;
    let p = signal_covariance(sources);
    let ah = a.adjoint();
    let gram_inv = (&ah * &a).try_inverse().ok_or(Error::SingularFisher)?;
    let projector = CMat::identity(m, m) - &a * gram_inv * &ah;
    let r = &a * &p * &ah + CMat::identity(m, m) * Complex64::new(noise_variance, 0.0);
    let r_inv = r.try_inverse().ok_or(Error::SingularFisher)?;
    let h = d.adjoint() * projector * &d;
    let g = &p * &ah * r_inv * &a * &p;
    let scale = 2.0 * snapshots as f64 / noise_variance;
    let matrix = DMatrix::from_fn(2 * k, 2 * k, |i, j| scale * (h[(i, j)] * g[(j % k, i % k)]).re);
    Ok(FisherBlock { matrix: symmetrize(matrix), snapshots })
}

impl FisherBlock {
    /// Per-parameter variance bounds, ordered like the Fisher matrix.
    ///
    /// The matrix is first normalized to unit diagonal so that the
    /// singularity test measures collinearity rather than units; a parameter
    /// with a significant component on a numerically null direction is
    /// unbounded, the rest come from the pseudo-inverse.
    pub fn variances(&self) -> Vec<Bound> {
        let n = self.matrix.nrows();
        let diag: Vec<f64> = (0..n).map(|i| self.matrix[(i, i)]).collect();
        let scale: Vec<f64> = diag.iter().map(|&v| if v > 0.0 { v.sqrt() } else { 0.0 }).collect();
        let normalized = DMatrix::from_fn(n, n, |i, j| {
            if scale[i] == 0.0 || scale[j] == 0.0 {
                0.0
            } else {
                self.matrix[(i, j)] / (scale[i] * scale[j])
            }
        });
        let eig = normalized.symmetric_eigen();
        let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let tol = 1e-12 * max.max(f64::MIN_POSITIVE);
        let mut pinv = DMatrix::<f64>::zeros(n, n);
        let mut null_weight = vec![0.0; n];
        for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(idx);
            if lambda > tol {
                pinv += v * v.transpose() / lambda;
            } else {
                for i in 0..n {
                    null_weight[i] += v[i] * v[i];
                }
            }
        }
        (0..n)
            .map(|i| {
                if scale[i] == 0.0 || null_weight[i] > 1e-6 {
                    Bound::Unbounded
                } else {
                    Bound::Finite(pinv[(i, i)] / diag[i])
                }
            })
            .collect()
    }

    pub fn source_bounds(&self, sources: &[SourceTruth]) -> Vec<SourceBound> {
        let k = sources.len();
        let v = self.variances();
        sources
            .iter()
            .enumerate()
            .map(|(i, s)| SourceBound {
                angle: v[i],
                range: match v[k + i] {
                    Bound::Finite(var) if var.sqrt() < s.range => Bound::Finite(var),
                    _ => Bound::Unbounded,
                },
            })
            .collect()
    }
}

/// Per-source bounds for `sources` observed on `config` (no coupling).
pub fn crb_sources(
    sources: &[SourceTruth],
    config: &ArrayConfig,
    noise_variance: f64,
    snapshots: usize,
    noise: NoiseKnowledge,
) -> Result<Vec<SourceBound>> {
    let fisher = fisher_information(sources, config, noise_variance, snapshots, noise)?;
    Ok(fisher.source_bounds(sources))
}

/// Bounds for a scenario's sources, SNR and snapshot count on `config`.
pub fn crb(scenario: &crate::signal::Scenario, config: &ArrayConfig) -> Result<Vec<SourceBound>> {
    crb_sources(&scenario.sources, config, scenario.noise_variance(), scenario.snapshots, NoiseKnowledge::Known)
}
