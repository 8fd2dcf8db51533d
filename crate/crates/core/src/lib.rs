//! Panel-data econometrics for bank net interest margins.
//!
//! Static pooled, fixed-effects and random-effects estimators, first-difference
//! and system GMM for the dynamic margin equation, the usual specification
//! tests, and a Monte Carlo simulator with known ground truth.

pub mod cli;
pub mod error;
pub mod gmm;
pub mod model;
pub mod numerics;
pub mod panel;
pub mod report;
pub mod simulation;
pub mod static_models;
pub mod variables;

pub use error::{Error, Result};

use model::{EstimationResult, Estimator, ModelSpec};
use panel::PanelDataset;

/// Runs the estimator selected in `spec`. GMM uses `spec.instruments`.
pub fn estimate(spec: &ModelSpec, data: &PanelDataset) -> Result<EstimationResult> {
    match spec.estimator {
        Estimator::Pols => static_models::estimate_pols(spec, data),
        Estimator::Fe => static_models::estimate_fe(spec, data),
        Estimator::Re => static_models::estimate_re(spec, data),
        Estimator::DiffGmm => gmm::estimate_diff_gmm(spec, &spec.instruments, data),
        Estimator::SysGmm => gmm::estimate_sys_gmm(spec, &spec.instruments, data),
    }
}
