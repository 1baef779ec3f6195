//! File-driven experiments: TOML configuration, campaigns, CSV/JSON output.

pub mod campaign;
pub mod config;
pub mod output;
pub mod single_shot;
pub mod validate;

pub use campaign::{run_campaign, run_crb_sweep, write_campaign, write_crb, CampaignResult, RmseRecord};
pub use config::{load_experiment, load_scenario, EstimatorKind, Experiment, SweepAxis};
pub use output::Manifest;
pub use single_shot::{run_single_shot, SingleShotReport};
pub use validate::{run_validation, write_validation, Check};
