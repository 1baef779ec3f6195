//! Python bindings: array geometry, steering, simulation + localization,
//! CRB, and the file-driven campaign / single-shot runners.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sfas_core::array::{self, SourceTruth};
use sfas_core::crb::{crb_sources, NoiseKnowledge};
use sfas_core::estimators::{self, Refiner};
use sfas_core::harness::{self, campaign, config};

create_exception!(sfas, SfasError, PyException, "Configuration or estimation failure.");

fn err(e: sfas_core::Error) -> PyErr {
    SfasError::new_err(e.to_string())
}

/// Uniform linear array: `elements` sensors at spacing `scale * baseline_spacing`.
#[pyclass(module = "sfas", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct ArrayConfig {
    inner: array::ArrayConfig,
}

#[pymethods]
impl ArrayConfig {
    #[new]
    #[pyo3(signature = (elements, scale = 1.0, baseline_spacing = array::HALF_WAVELENGTH))]
    fn new(elements: usize, scale: f64, baseline_spacing: f64) -> PyResult<Self> {
        Ok(Self { inner: array::ArrayConfig::new(elements, baseline_spacing, scale).map_err(err)? })
    }

    #[getter]
    fn elements(&self) -> usize {
        self.inner.element_count()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.inner.spacing()
    }

    #[getter]
    fn aperture(&self) -> f64 {
        self.inner.aperture()
    }

    #[getter]
    fn rayleigh_distance(&self) -> f64 {
        self.inner.rayleigh_distance()
    }

    fn positions(&self) -> Vec<f64> {
        array::element_positions(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "ArrayConfig(elements={}, scale={}, baseline_spacing={})",
            self.inner.element_count(),
            self.inner.scale(),
            self.inner.baseline_spacing()
        )
    }
}

/// Exact spherical-wavefront steering vector; angle in degrees, range in wavelengths.
#[pyfunction]
fn esg_steering(angle_deg: f64, range: f64, config: ArrayConfig) -> PyResult<Vec<Complex64>> {
    let v = array::esg_steering(angle_deg.to_radians(), range, &config.inner).map_err(err)?;
    Ok(v.entries.iter().copied().collect())
}

#[pyfunction]
fn ff_steering(angle_deg: f64, config: ArrayConfig) -> Vec<Complex64> {
    array::ff_steering(angle_deg.to_radians(), &config.inner).entries.iter().copied().collect()
}

/// A scenario plus estimator and campaign settings, as in the TOML files.
#[pyclass(module = "sfas", from_py_object)]
#[derive(Clone)]
struct Experiment {
    inner: config::Experiment,
}

#[pymethods]
impl Experiment {
    /// `sources` is a list of `(angle_deg, range)` pairs; everything else defaults.
    #[new]
    #[pyo3(signature = (sources, seed = 0))]
    fn new(sources: Vec<(f64, f64)>, seed: u64) -> Self {
        Self { inner: config::Experiment::with_sources(seed, &sources) }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner = config::Experiment::from_toml_str(text).map_err(|e| SfasError::new_err(e.to_string()))?;
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: harness::load_experiment(&path).map_err(err)? })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml().map_err(err)
    }

    /// Raises with every violated invariant listed.
    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(err)
    }

    #[getter]
    fn get_seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, v: u64) {
        self.inner.seed = v;
    }

    #[getter]
    fn get_snr_db(&self) -> f64 {
        self.inner.snr_db
    }

    #[setter]
    fn set_snr_db(&mut self, v: f64) {
        self.inner.snr_db = v;
    }

    #[getter]
    fn get_snapshots(&self) -> usize {
        self.inner.snapshots
    }

    #[setter]
    fn set_snapshots(&mut self, v: usize) {
        self.inner.snapshots = v;
    }

    #[getter]
    fn get_trials(&self) -> usize {
        self.inner.trials
    }

    #[setter]
    fn set_trials(&mut self, v: usize) {
        self.inner.trials = v;
    }

    #[getter]
    fn get_elements(&self) -> usize {
        self.inner.array.elements
    }

    #[setter]
    fn set_elements(&mut self, v: usize) {
        self.inner.array.elements = v;
    }

    /// Residual coupling band of the extended configuration.
    #[getter]
    fn get_extended_band(&self) -> usize {
        self.inner.coupling.extended_band
    }

    #[setter]
    fn set_extended_band(&mut self, v: usize) {
        self.inner.coupling.extended_band = v;
    }

    #[getter]
    fn sources(&self) -> Vec<(f64, f64)> {
        self.inner.sources.iter().map(|s| (s.angle_deg, s.range)).collect()
    }

    fn __repr__(&self) -> String {
        format!("Experiment(sources={:?}, seed={})", self.sources(), self.inner.seed)
    }
}

fn estimate_dict<'py>(py: Python<'py>, e: &estimators::SourceEstimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("coarse_angle_deg", e.coarse_angle.to_degrees())?;
    d.set_item("initial_range", e.initial_range)?;
    d.set_item("angle_deg", e.refined_angle.to_degrees())?;
    d.set_item("range", e.refined_range)?;
    d.set_item("flat_range", e.flat_range)?;
    d.set_item("boundary_hit", e.boundary_hit)?;
    Ok(d)
}

/// Simulates trial `trial` and runs the two-stage estimator. `mc_band`
/// switches stage 2 to rank-reduction MUSIC.
#[pyfunction]
#[pyo3(signature = (experiment, trial = 0, mc_band = None))]
fn localize<'py>(
    py: Python<'py>,
    experiment: &Experiment,
    trial: u64,
    mc_band: Option<usize>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let scenario = experiment.inner.scenario().map_err(err)?;
    let refiner = mc_band.map_or(Refiner::Music, |band| Refiner::RankReduction { band });
    let settings = experiment.inner.estimator.clone();
    let out = py
        .detach(|| estimators::localize(&scenario, trial, &settings, refiner))
        .map_err(err)?;
    out.estimate.sources.iter().map(|e| estimate_dict(py, e)).collect()
}

/// Standard-deviation bounds `(angle_deg, range)` per source; `inf` when unbounded.
#[pyfunction]
#[pyo3(signature = (experiment, baseline = false))]
fn crb(experiment: &Experiment, baseline: bool) -> PyResult<Vec<(f64, f64)>> {
    let s = experiment.inner.scenario().map_err(err)?;
    let config = if baseline { s.baseline() } else { s.extended };
    let sources: Vec<SourceTruth> = s.sources.clone();
    let bounds = crb_sources(&sources, &config, s.noise_variance(), s.snapshots, NoiseKnowledge::Known).map_err(err)?;
    Ok(bounds
        .iter()
        .map(|b| {
            (
                b.angle.std().map_or(f64::INFINITY, f64::to_degrees),
                b.range.std().unwrap_or(f64::INFINITY),
            )
        })
        .collect())
}

/// Writes the single-shot bundle to `out` and returns the report as JSON text.
#[pyfunction]
#[pyo3(signature = (experiment, out, trial = 0))]
fn single_shot(py: Python<'_>, experiment: &Experiment, out: PathBuf, trial: u64) -> PyResult<String> {
    let e = experiment.inner.clone();
    let report = py.detach(|| harness::run_single_shot(&e, trial, Refiner::Music, None, &out)).map_err(err)?;
    serde_json::to_string(&report).map_err(|e| SfasError::new_err(e.to_string()))
}

/// Runs the configured campaign; writes `rmse.csv`, `trials.csv` and the
/// manifest when `out` is given. Returns the RMSE records as dicts.
#[pyfunction]
#[pyo3(signature = (experiment, out = None, threads = None))]
fn run_campaign<'py>(
    py: Python<'py>,
    experiment: &Experiment,
    out: Option<PathBuf>,
    threads: Option<usize>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let e = experiment.inner.clone();
    let result = py.detach(|| -> sfas_core::Result<campaign::CampaignResult> {
        let result = campaign::run_campaign(&e, threads)?;
        if let Some(dir) = &out {
            campaign::write_campaign(&result, &e, dir)?;
        }
        Ok(result)
    });
    let result = result.map_err(err)?;
    result
        .records
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("sweep_value", r.sweep_value)?;
            d.set_item("estimator", r.estimator.name())?;
            d.set_item("source", r.source)?;
            d.set_item("coarse_angle_rmse_deg", r.coarse_angle_rmse_deg)?;
            d.set_item("angle_rmse_deg", r.angle_rmse_deg)?;
            d.set_item("range_rmse", r.range_rmse)?;
            d.set_item("range_rmse_normalized", r.range_rmse_normalized)?;
            d.set_item("successes", r.successes)?;
            d.set_item("failures", r.failures)?;
            Ok(d)
        })
        .collect()
}

/// `(name, passed, detail)` for every invariant check.
#[pyfunction]
fn validate(experiment: &Experiment) -> PyResult<Vec<(String, bool, String)>> {
    let checks = harness::run_validation(&experiment.inner).map_err(err)?;
    Ok(checks.into_iter().map(|c| (c.name, c.passed, c.detail)).collect())
}

#[pymodule]
pub fn sfas(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SfasError", m.py().get_type::<SfasError>())?;
    m.add_class::<ArrayConfig>()?;
    m.add_class::<Experiment>()?;
    m.add_function(wrap_pyfunction!(esg_steering, m)?)?;
    m.add_function(wrap_pyfunction!(ff_steering, m)?)?;
    m.add_function(wrap_pyfunction!(localize, m)?)?;
    m.add_function(wrap_pyfunction!(crb, m)?)?;
    m.add_function(wrap_pyfunction!(single_shot, m)?)?;
    m.add_function(wrap_pyfunction!(run_campaign, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
