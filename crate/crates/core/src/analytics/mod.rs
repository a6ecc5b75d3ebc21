//! Quantitative evaluation: closed-form run probabilities with enumeration
//! and Monte Carlo oracles, DET curves, and the width-distortion
//! protection measurement.

mod det;
mod mc;
mod protect;
pub mod runs;

pub use det::{auto_thresholds, det_curve, DetCurve, DetPoint, FlagDirection};
pub use mc::{monte_carlo_attack, McAttackConfig, McAttackReport};
pub use protect::{protection_eval, DiffStats, ProtectConfig, ProtectReport};
pub use runs::{
    brute_force_run_prob, census_run_prob, enumeration_census, expected_attempts, expected_time,
    mc_expected_attempts, n_stop, p_detection, p_protection, p_run, RunStats,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("parameter: {0}")]
    Param(String),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error(transparent)]
    Pixel(#[from] crate::pixel::PixelError),
}
