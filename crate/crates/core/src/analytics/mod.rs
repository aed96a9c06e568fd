//! Latent extraction, two-sample KS comparison, logistic classification
//! with stratified cross-validation, and Cox survival with Harrell's C.

mod classify;
mod latents;
mod logistic;
mod stats;
mod survival;

pub use classify::{
    auroc, classification_metrics, kfold_cv, stratified_folds, ClassificationMetrics, CvResult,
    DEFAULT_FOLDS, DEFAULT_L2, DEFAULT_THRESHOLD,
};
pub use latents::{extract_latents, extract_latents_from_manifest, LatentDataset, SubjectPhases};
pub use logistic::{logistic_fit, sigmoid, LogisticModel, GRADIENT_TOLERANCE, MAX_NEWTON_ITERATIONS};
pub use stats::{kolmogorov_q, ks_two_sample, KsResult, Standardizer};
pub use survival::{
    cox_fit, cox_fit_with_ridge, harrell_c, survival_cv, SurvivalCvResult, SurvivalFit,
    COX_MAX_ITERATIONS, COX_RIDGE, SURVIVAL_CSV_HEADER,
};

use thiserror::Error;

use crate::network::Direction;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("rows have different lengths")]
    Ragged,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("non-finite input")]
    NonFinite,
    #[error("both labels are required")]
    SingleLabel,
    #[error("{k} folds requested for {cases} cases")]
    TooManyFolds { k: usize, cases: usize },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("need at least 2 events, got {0}")]
    TooFewEvents(usize),
    #[error("no comparable pairs")]
    NoComparablePairs,
    #[error("singular Newton system")]
    Singular,
    #[error("Cox fit did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NonConvergence { iterations: usize, gradient_norm: f64 },
    #[error("checkpoint direction {checkpoint} does not match requested {requested}")]
    DirectionMismatch { checkpoint: Direction, requested: Direction },
    #[error("subject {subject}: {message}")]
    Subject { subject: String, message: String },
}
