//! Subspace estimators: stage-1 far-field MUSIC, stage-2 spherical refinement,
//! the rank-reduction variant, and the baselines used for comparison.

pub mod mc_music;
pub mod oracle;
pub mod pairing;
pub mod pipeline;
pub mod spectrum;
pub mod stage1;
pub mod stage2;
pub mod subspace;

pub use mc_music::{coupling_manifold, mc_music_refine, mc_music_spectrum, rank_reduction_eigenvalues};
pub use oracle::{oracle_2d_music, OracleOutput};
pub use pairing::{pair_estimates, Pairing};
pub use pipeline::{
    baseline_angles, localize, two_stage, EstimatorSettings, LinearGrid, LocalizationEstimate, LogGrid, Refiner,
    SourceEstimate, TwoStageOutput,
};
pub use spectrum::{linear_grid, log_grid, pick_peaks, Axis, SpectrumGrid};
pub use stage1::{baseline_ff_music, coarse_angles, stage1_music, stage1_spectrum, Stage1Spectrum};
pub use stage2::{default_passes, stage2_range_search, stage2_refine, window_spectrum, PassStep, RangeSearch, Refinement, SearchWindow};
pub use subspace::{decompose, decompose_matrix, SubspaceDecomposition};
