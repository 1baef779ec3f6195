//! Snapshot simulation for both array configurations and sample covariance.
//!
//! Every random draw comes from a ChaCha8 generator keyed by
//! `(seed, trial, stage, role)`; within a key, ChaCha stream `k` carries the
//! samples of source `k` (signal role) or element `k` (noise role). Adding
//! sources, elements or snapshots therefore never perturbs existing draws.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::array::{esg_steering, ArrayConfig, SourceTruth};
use crate::coupling::{coupling_matrix, CouplingModel};
use crate::{CMat, Error, Result};

/// Which physical configuration a block of snapshots comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Compressed,
    Extended,
    /// Fixed half-wavelength array used by the conventional comparison.
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Signal,
    Noise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub sources: Vec<SourceTruth>,
    pub compressed: ArrayConfig,
    pub extended: ArrayConfig,
    /// Coupling model of the compressed configuration.
    pub coupling: CouplingModel,
    /// Coupling band applied in the extended configuration (0 disables it).
    pub extended_band: usize,
    pub snapshots: usize,
    pub snr_db: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn source_count(&self) -> usize {
        self.sources.len()
    }

    /// `σ_n² = 10^(-SNR/10)` for unit reference power; zero at `SNR = +inf`.
    pub fn noise_variance(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }

    /// Half-wavelength array with the same element count.
    pub fn baseline(&self) -> ArrayConfig {
        self.compressed.rescaled(1.0).expect("unit scale is always valid")
    }

    pub fn config(&self, stage: Stage) -> ArrayConfig {
        match stage {
            Stage::Compressed => self.compressed,
            Stage::Extended => self.extended,
            Stage::Baseline => self.baseline(),
        }
    }

    pub fn extended_coupling(&self) -> CouplingModel {
        self.coupling.with_band(self.extended_band)
    }

    /// Coupling model that is physically present in `stage`.
    pub fn stage_coupling(&self, stage: Stage) -> CouplingModel {
        match stage {
            Stage::Compressed | Stage::Baseline => self.coupling,
            Stage::Extended => self.extended_coupling(),
        }
    }

    /// Every violated invariant, given the central-subarray trim stage 1 will use.
    pub fn problems(&self, trim: usize) -> Vec<String> {
        let mut problems = Vec::new();
        let m = self.compressed.element_count();
        if self.extended.element_count() != m {
            problems.push("compressed and extended configurations must share the element count".into());
        }
        if self.compressed.baseline_spacing() != self.extended.baseline_spacing() {
            problems.push("compressed and extended configurations must share the baseline spacing".into());
        }
        if !(self.compressed.scale() < 1.0) {
            problems.push(format!("compressed scale must be < 1 (got {})", self.compressed.scale()));
        }
        if !(self.extended.scale() > 1.0) {
            problems.push(format!("extended scale must be > 1 (got {})", self.extended.scale()));
        }
        if self.snapshots == 0 {
            problems.push("snapshots must be >= 1".into());
        }
        if self.snr_db.is_nan() {
            problems.push("snr_db must be a number".into());
        }
        problems.extend(self.coupling.validate());
        if self.coupling.band + 1 > m {
            problems.push(format!("coupling band {} exceeds M-1 = {}", self.coupling.band, m - 1));
        }
        if self.extended_band + 1 > m {
            problems.push(format!("extended coupling band {} exceeds M-1 = {}", self.extended_band, m - 1));
        }
        if 2 * trim + 2 > m {
            problems.push(format!("trim {trim} leaves fewer than 2 of {m} elements"));
        } else if self.source_count() + 2 * trim >= m {
            problems.push(format!(
                "{} sources are not identifiable with {} central elements (need K < M - 2·trim)",
                self.source_count(),
                m - 2 * trim
            ));
        }
        for (k, s) in self.sources.iter().enumerate() {
            if let Err(Error::InvalidConfig(msg)) = SourceTruth::new(s.angle, s.range, s.power) {
                problems.push(format!("source {}: {msg}", k + 1));
            }
            if !(s.range > self.compressed.aperture()) {
                problems.push(format!(
                    "source {}: range {} must exceed the compressed aperture {}",
                    k + 1,
                    s.range,
                    self.compressed.aperture()
                ));
            }
        }
        problems
    }

    pub fn validate(&self, trim: usize) -> Result<()> {
        let problems = self.problems(trim);
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Deterministic generator for one `(seed, trial, stage, role)` key.
pub fn stream_rng(seed: u64, trial: u64, stage: Stage, role: Role) -> ChaCha8Rng {
    let stage_tag = match stage {
        Stage::Compressed => 1,
        Stage::Extended => 2,
        Stage::Baseline => 3,
    };
    let role_tag = match role {
        Role::Signal => 1,
        Role::Noise => 2,
    };
    let mut key = splitmix64(seed);
    for tag in [trial, stage_tag, role_tag] {
        key = splitmix64(key ^ tag);
    }
    ChaCha8Rng::seed_from_u64(key)
}

/// Unit-variance circular complex Gaussian sample.
fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `rows × n` unit-variance samples where row `i` reads ChaCha stream `i`.
fn draw_rows(mut rng: ChaCha8Rng, rows: usize, n: usize) -> CMat {
    let mut out = CMat::zeros(rows, n);
    for i in 0..rows {
        rng.set_stream(i as u64);
        rng.set_word_pos(0);
        for t in 0..n {
            out[(i, t)] = complex_normal(&mut rng);
        }
    }
    out
}

/// The `K × N` unit-power waveform matrix of a trial and stage.
pub fn waveforms(scenario: &Scenario, trial: u64, stage: Stage) -> CMat {
    let rng = stream_rng(scenario.seed, trial, stage, Role::Signal);
    draw_rows(rng, scenario.source_count(), scenario.snapshots)
}

/// Channel matrix `[C·]A_ESG·diag(√P)` for a stage.
pub fn channel_matrix(scenario: &Scenario, stage: Stage, include_coupling: bool) -> Result<CMat> {
    let config = scenario.config(stage);
    let m = config.element_count();
    let mut channel = CMat::zeros(m, scenario.source_count());
    for (k, source) in scenario.sources.iter().enumerate() {
        let a = esg_steering(source.angle, source.range, &config)?;
        channel.set_column(k, &(a.entries * Complex64::new(source.power.sqrt(), 0.0)));
    }
    if include_coupling {
        let coupling = coupling_matrix(&config, &scenario.stage_coupling(stage))?;
        channel = coupling.entries * channel;
    }
    Ok(channel)
}

/// `M × N` observations together with the noise variance that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotBlock {
    pub data: CMat,
    pub noise_variance: f64,
    pub config: ArrayConfig,
}

impl SnapshotBlock {
    pub fn element_count(&self) -> usize {
        self.data.nrows()
    }

    pub fn snapshot_count(&self) -> usize {
        self.data.ncols()
    }
}

pub fn generate_snapshots(
    scenario: &Scenario,
    trial: u64,
    stage: Stage,
    include_coupling: bool,
) -> Result<SnapshotBlock> {
    let config = scenario.config(stage);
    let channel = channel_matrix(scenario, stage, include_coupling)?;
    let mut data = if scenario.source_count() == 0 {
        CMat::zeros(config.element_count(), scenario.snapshots)
    } else {
        channel * waveforms(scenario, trial, stage)
    };
    let noise_variance = scenario.noise_variance();
    if noise_variance > 0.0 {
        let rng = stream_rng(scenario.seed, trial, stage, Role::Noise);
        let noise = draw_rows(rng, config.element_count(), scenario.snapshots);
        data += noise * Complex64::new(noise_variance.sqrt(), 0.0);
    }
    Ok(SnapshotBlock { data, noise_variance, config })
}

/// Compressed-configuration observations; coupling is always present.
pub fn generate_snapshots_compressed(scenario: &Scenario, trial: u64) -> Result<SnapshotBlock> {
    generate_snapshots(scenario, trial, Stage::Compressed, true)
}

/// Extended-configuration observations with optional residual coupling.
pub fn generate_snapshots_extended(scenario: &Scenario, trial: u64, include_coupling: bool) -> Result<SnapshotBlock> {
    generate_snapshots(scenario, trial, Stage::Extended, include_coupling)
}

/// Fixed half-wavelength array observations (coupling evaluated at unit scale).
pub fn generate_snapshots_baseline(scenario: &Scenario, trial: u64) -> Result<SnapshotBlock> {
    generate_snapshots(scenario, trial, Stage::Baseline, true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub matrix: CMat,
    pub snapshot_count: usize,
}

/// `(1/N)·X·X^H`, exactly Hermitian.
pub fn sample_covariance(block: &SnapshotBlock) -> CovarianceEstimate {
    let x = &block.data;
    let (m, n) = x.shape();
    let mut r = CMat::zeros(m, m);
    let scale = 1.0 / n.max(1) as f64;
    for i in 0..m {
        for j in i..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..n {
                acc += x[(i, t)] * x[(j, t)].conj();
            }
            acc *= scale;
            if i == j {
                acc.im = 0.0;
            }
            r[(i, j)] = acc;
            r[(j, i)] = acc.conj();
        }
    }
    CovarianceEstimate { matrix: r, snapshot_count: n }
}

/// Population covariance `H·R_s·H^H + σ_n²·I` with uncorrelated unit waveforms.
pub fn theoretical_covariance(scenario: &Scenario, stage: Stage, include_coupling: bool) -> Result<CMat> {
    let channel = channel_matrix(scenario, stage, include_coupling)?;
    let m = channel.nrows();
    Ok(&channel * channel.adjoint() + CMat::identity(m, m) * Complex64::new(scenario.noise_variance(), 0.0))
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"SFASSNAP";
const SNAPSHOT_VERSION: u32 = 1;

/// Element precision of an exported snapshot file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Complex64,
    Complex128,
}

impl Precision {
    fn bits(self) -> u32 {
        match self {
            Precision::Complex64 => 64,
            Precision::Complex128 => 128,
        }
    }
}

/// Little-endian binary export.
///
/// Layout: magic `SFASSNAP`, `u32` version, `u32` bits per complex sample
/// (64 or 128), `u64` M, `u64` N, `f64` noise variance, `f64` scale, `f64`
/// baseline spacing, then M·N row-major `(re, im)` pairs as f32 or f64.
pub fn write_snapshots<W: Write>(block: &SnapshotBlock, precision: Precision, mut out: W) -> Result<()> {
    out.write_all(SNAPSHOT_MAGIC)?;
    out.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    out.write_all(&precision.bits().to_le_bytes())?;
    out.write_all(&(block.element_count() as u64).to_le_bytes())?;
    out.write_all(&(block.snapshot_count() as u64).to_le_bytes())?;
    out.write_all(&block.noise_variance.to_le_bytes())?;
    out.write_all(&block.config.scale().to_le_bytes())?;
    out.write_all(&block.config.baseline_spacing().to_le_bytes())?;
    for i in 0..block.element_count() {
        for t in 0..block.snapshot_count() {
            let z = block.data[(i, t)];
            match precision {
                Precision::Complex64 => {
                    out.write_all(&(z.re as f32).to_le_bytes())?;
                    out.write_all(&(z.im as f32).to_le_bytes())?;
                }
                Precision::Complex128 => {
                    out.write_all(&z.re.to_le_bytes())?;
                    out.write_all(&z.im.to_le_bytes())?;
                }
            }
        }
    }
    Ok(out.flush()?)
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn read_snapshots<R: Read>(mut input: R) -> Result<SnapshotBlock> {
    if &read_array::<8, _>(&mut input)? != SNAPSHOT_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut input)?);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let precision = match u32::from_le_bytes(read_array(&mut input)?) {
        64 => Precision::Complex64,
        128 => Precision::Complex128,
        other => return Err(Error::Format(format!("unsupported sample width {other}"))),
    };
    let m = u64::from_le_bytes(read_array(&mut input)?) as usize;
    let n = u64::from_le_bytes(read_array(&mut input)?) as usize;
    let noise_variance = f64::from_le_bytes(read_array(&mut input)?);
    let scale = f64::from_le_bytes(read_array(&mut input)?);
    let spacing = f64::from_le_bytes(read_array(&mut input)?);
    let config = ArrayConfig::new(m, spacing, scale)?;
    let mut data = DMatrix::zeros(m, n);
    for i in 0..m {
        for t in 0..n {
            data[(i, t)] = match precision {
                Precision::Complex64 => Complex64::new(
                    f32::from_le_bytes(read_array(&mut input)?) as f64,
                    f32::from_le_bytes(read_array(&mut input)?) as f64,
                ),
                Precision::Complex128 => Complex64::new(
                    f64::from_le_bytes(read_array(&mut input)?),
                    f64::from_le_bytes(read_array(&mut input)?),
                ),
            };
        }
    }
    Ok(SnapshotBlock { data, noise_variance, config })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::CouplingModel;
    use proptest::prelude::*;

    fn scenario(sources: Vec<SourceTruth>, snapshots: usize, snr_db: f64) -> Scenario {
        Scenario {
            sources,
            compressed: ArrayConfig::with_scale(32, 0.2).unwrap(),
            extended: ArrayConfig::with_scale(32, 2.0).unwrap(),
            coupling: CouplingModel::default(),
            extended_band: 0,
            snapshots,
            snr_db,
            seed: 7,
        }
    }

    fn src(deg: f64, r: f64) -> SourceTruth {
        SourceTruth::from_degrees(deg, r, 1.0).unwrap()
    }

    fn paper_sources() -> Vec<SourceTruth> {
        vec![src(-40.0, 30.0), src(-20.0, 300.0), src(10.0, 1000.0), src(30.0, 5000.0)]
    }

    #[test]
    fn noiseless_single_snapshot_is_the_coupled_channel() {
        let mut s = scenario(vec![SourceTruth::from_degrees(12.0, 40.0, 2.5).unwrap()], 1, f64::INFINITY);
        s.seed = 99;
        let block = generate_snapshots_compressed(&s, 3).unwrap();
        assert_eq!(block.noise_variance, 0.0);
        let coupling = coupling_matrix(&s.compressed, &s.coupling).unwrap().entries;
        let a = esg_steering(s.sources[0].angle, 40.0, &s.compressed).unwrap().entries;
        let scalar = waveforms(&s, 3, Stage::Compressed)[(0, 0)];
        let expected = coupling * a * Complex64::new(2.5f64.sqrt(), 0.0) * scalar;
        assert!((block.data.column(0) - expected).norm() < 1e-13);
    }

    #[test]
    fn extended_flag_off_is_parallel_to_steering() {
        let s = scenario(vec![src(-25.0, 80.0)], 1, f64::INFINITY);
        let block = generate_snapshots_extended(&s, 0, false).unwrap();
        let a = esg_steering(s.sources[0].angle, 80.0, &s.extended).unwrap().entries;
        let ratio = block.data[(0, 0)] / a[0];
        assert!((block.data.column(0) - a * ratio).norm() < 1e-12);

        // No extended coupling configured, so the flag is inert.
        let mut s2 = s.clone();
        s2.coupling.reference_strength = 0.0;
        s2.extended_band = 2;
        let on = generate_snapshots_extended(&s2, 0, true).unwrap();
        let off = generate_snapshots_extended(&s2, 0, false).unwrap();
        assert_eq!(on, off);
    }

    #[test]
    fn noise_only_covariance_approaches_scaled_identity() {
        // Expected relative Frobenius error is sqrt(M/N).
        let mut s = scenario(vec![], 10_000, 3.0);
        s.compressed = ArrayConfig::with_scale(8, 0.2).unwrap();
        s.extended = ArrayConfig::with_scale(8, 2.0).unwrap();
        let block = generate_snapshots_compressed(&s, 0).unwrap();
        let r = sample_covariance(&block).matrix;
        let target = CMat::identity(8, 8) * Complex64::new(s.noise_variance(), 0.0);
        let rel = (&r - &target).norm() / target.norm();
        assert!(rel < 0.05, "{rel}");
        assert!((rel / (8.0f64 / 10_000.0).sqrt() - 1.0).abs() < 0.3, "{rel}");
    }

    #[test]
    fn noise_power_tracks_snr() {
        let base = scenario(vec![src(5.0, 100.0)], 10_000, 0.0);
        for snr in [-10.0, 0.0, 10.0, 20.0] {
            let s = Scenario { snr_db: snr, ..base.clone() };
            let with_noise = generate_snapshots_extended(&s, 1, false).unwrap();
            let clean = generate_snapshots_extended(&Scenario { snr_db: f64::INFINITY, ..s.clone() }, 1, false).unwrap();
            let noise = &with_noise.data - &clean.data;
            let noise_power = noise.norm_squared() / noise.len() as f64;
            let signal_power = clean.data.norm_squared() / clean.data.len() as f64;
            let expected = 10f64.powf(-snr / 10.0);
            assert!((noise_power / expected - 1.0).abs() < 0.03, "snr {snr}: {noise_power}");
            // Unit-power source through unit-magnitude-ish steering.
            assert!((signal_power - 1.0).abs() < 0.05, "{signal_power}");
        }
    }

    #[test]
    fn covariance_examples() {
        let config = ArrayConfig::with_scale(4, 1.0).unwrap();
        let zero = SnapshotBlock { data: CMat::zeros(4, 3), noise_variance: 0.0, config };
        assert_eq!(sample_covariance(&zero).matrix, CMat::zeros(4, 4));

        let x = CMat::from_fn(4, 1, |i, _| Complex64::new(i as f64, 1.0 - i as f64));
        let single = SnapshotBlock { data: x.clone(), noise_variance: 0.0, config };
        let r = sample_covariance(&single).matrix;
        assert!((&r - &x * x.adjoint()).norm() < 1e-14);
        assert_eq!(r.rank(1e-10), 1);
    }

    #[test]
    fn covariance_eigenvalues_match_population() {
        let s = scenario(vec![src(15.0, 200.0)], 100_000, 20.0);
        let block = generate_snapshots_extended(&s, 0, false).unwrap();
        let mut eig: Vec<f64> = sample_covariance(&block).matrix.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let h = channel_matrix(&s, Stage::Extended, false).unwrap();
        let signal = h.norm_squared() + s.noise_variance();
        assert!((eig[0] / signal - 1.0).abs() < 0.05, "{} vs {signal}", eig[0]);
        let noise_sum: f64 = eig[1..].iter().sum();
        let expected = s.noise_variance() * 31.0;
        assert!((noise_sum / expected - 1.0).abs() < 0.05, "{noise_sum} vs {expected}");
    }

    #[test]
    fn covariance_is_hermitian_psd() {
        let s = scenario(paper_sources(), 300, 5.0);
        let block = generate_snapshots_compressed(&s, 0).unwrap();
        let r = sample_covariance(&block).matrix;
        assert_eq!((&r - r.adjoint()).norm(), 0.0);
        let trace: f64 = (0..32).map(|i| r[(i, i)].re).sum();
        let min = r.symmetric_eigenvalues().min();
        assert!(min > -1e-10 * trace);
    }

    #[test]
    fn consistency_rate_is_root_n() {
        let mut errs = Vec::new();
        let ns = [100usize, 1000, 10_000];
        for &n in &ns {
            let s = scenario(vec![src(-20.0, 60.0), src(25.0, 900.0)], n, 5.0);
            let theory = theoretical_covariance(&s, Stage::Compressed, true).unwrap();
            // Average over a few trials to tame the slope estimate.
            let mean: f64 = (0..6)
                .map(|trial| {
                    let r = sample_covariance(&generate_snapshots_compressed(&s, trial).unwrap()).matrix;
                    (&r - &theory).norm() / theory.norm()
                })
                .sum::<f64>()
                / 6.0;
            errs.push(mean);
        }
        let slope = (errs[2].ln() - errs[0].ln()) / ((ns[2] as f64).ln() - (ns[0] as f64).ln());
        assert!((slope + 0.5).abs() < 0.15, "slope {slope}, errors {errs:?}");
    }

    #[test]
    fn trace_accounts_for_source_power() {
        let s = scenario(vec![src(-30.0, 50.0), SourceTruth::from_degrees(20.0, 700.0, 3.0).unwrap()], 50_000, f64::INFINITY);
        let r = sample_covariance(&generate_snapshots_compressed(&s, 0).unwrap()).matrix;
        let h = channel_matrix(&s, Stage::Compressed, true).unwrap();
        let expected = h.norm_squared();
        let trace: f64 = (0..32).map(|i| r[(i, i)].re).sum();
        assert!((trace / expected - 1.0).abs() < 0.02, "{trace} vs {expected}");
    }

    #[test]
    fn adding_snapshots_or_sources_keeps_existing_draws() {
        let s = scenario(vec![src(-30.0, 50.0)], 40, 0.0);
        let longer = Scenario { snapshots: 80, ..s.clone() };
        let w = waveforms(&s, 4, Stage::Extended);
        let w2 = waveforms(&longer, 4, Stage::Extended);
        assert_eq!(w.row(0), w2.view((0, 0), (1, 40)));
        let more = Scenario { sources: vec![src(-30.0, 50.0), src(40.0, 90.0)], ..s.clone() };
        assert_eq!(waveforms(&more, 4, Stage::Extended).row(0), w.row(0));
        // Stages and trials are independent streams.
        assert_ne!(waveforms(&s, 4, Stage::Compressed), w);
        assert_ne!(waveforms(&s, 5, Stage::Extended), w);
    }

    /// FNV-1a over the f64 bit patterns; fixture established on first run.
    fn checksum(m: &CMat) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for z in m.iter() {
            for bits in [z.re.to_bits(), z.im.to_bits()] {
                for b in bits.to_le_bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x0000_0100_0000_01b3);
                }
            }
        }
        h
    }

    #[test]
    fn paper_scenario_block_fixture() {
        let mut s = scenario(paper_sources(), 500, 20.0);
        s.seed = 2024;
        let a = generate_snapshots_compressed(&s, 0).unwrap();
        let b = generate_snapshots_compressed(&s, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(checksum(&a.data), BLOCK_CHECKSUM_FIXTURE);
    }

    const BLOCK_CHECKSUM_FIXTURE: u64 = 4729584903851280264;

    #[test]
    fn validation_lists_every_problem() {
        let mut s = scenario(paper_sources(), 0, 0.0);
        s.compressed = ArrayConfig::with_scale(32, 1.5).unwrap();
        s.sources.push(SourceTruth { angle: 2.0, range: 1.0, power: 1.0 });
        let problems = s.problems(2);
        assert!(problems.len() >= 4, "{problems:?}");
        assert!(problems.iter().any(|p| p.contains("compressed scale")));
        assert!(problems.iter().any(|p| p.contains("snapshots")));
        assert!(problems.iter().any(|p| p.contains("source 5")));
        assert!(scenario(paper_sources(), 10, 0.0).validate(2).is_ok());
        assert!(scenario(paper_sources(), 10, 0.0).validate(14).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn binary_round_trip(m in 2usize..6, n in 1usize..8, seed in any::<u64>(), snr in -10.0f64..30.0) {
            let config = ArrayConfig::with_scale(m, 2.0).unwrap();
            let s = Scenario {
                sources: vec![src(10.0, 50.0)],
                compressed: config.rescaled(0.2).unwrap(),
                extended: config,
                coupling: CouplingModel::none(),
                extended_band: 0,
                snapshots: n,
                snr_db: snr,
                seed,
            };
            let block = generate_snapshots_extended(&s, 0, false).unwrap();
            let mut buf = Vec::new();
            write_snapshots(&block, Precision::Complex128, &mut buf).unwrap();
            prop_assert_eq!(&read_snapshots(buf.as_slice()).unwrap(), &block);

            let mut buf32 = Vec::new();
            write_snapshots(&block, Precision::Complex64, &mut buf32).unwrap();
            prop_assert_eq!(buf32.len(), 56 + 8 * m * n);
            let back = read_snapshots(buf32.as_slice()).unwrap();
            prop_assert!((back.data - &block.data).norm() < 1e-5 * (1.0 + block.data.norm()));
        }
    }

    #[test]
    fn corrupted_files_rejected() {
        assert!(matches!(read_snapshots(&b"NOTSNAPS........"[..]), Err(Error::Format(_))));
        assert!(read_snapshots(&b"SFAS"[..]).is_err());
    }
}
