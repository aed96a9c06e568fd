//! Encoder-decoder network mapping a biventricular point cloud at one cardiac
//! phase to the other.
//!
//! The encoder runs two stacked point-set stages (shared per-point MLP then a
//! max-pool; the first pooled feature is appended to every point before the
//! second stage) and an MLP head producing the latent vector. The decoder
//! produces `m` coarse points per class with an MLP, then folds a small 2D
//! grid around every coarse point into `p = m * grid_side^2` dense points.

mod checkpoint;
mod config;
mod model;

pub use checkpoint::{Checkpoint, FORMAT_VERSION, MAGIC};
pub use config::{ArchitectureConfig, FOLD_FIXED_FEATURES, INPUT_FEATURES};
pub use model::{expected_shapes, BoundParams, DeformationPrediction, NetOutputs, PcdNet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::geometry::GeometryError;

/// Which phase is predicted from which.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Contraction: end-diastole in, end-systole out.
    Ed2Es,
    /// Relaxation: end-systole in, end-diastole out.
    Es2Ed,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Ed2Es => "ed2es",
            Direction::Es2Ed => "es2ed",
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Direction {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ed2es" => Ok(Direction::Ed2Es),
            "es2ed" => Ok(Direction::Es2Ed),
            other => Err(NetworkError::InvalidConfig(format!(
                "unknown direction `{other}` (expected ed2es or es2ed)"
            ))),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid architecture: {0}")]
    InvalidConfig(String),
    #[error("latent has length {got}, expected {expected}")]
    LatentLength { expected: usize, got: usize },
    #[error("coarse cloud has shape {got:?}, expected {expected:?}")]
    CoarseShape { expected: Vec<usize>, got: Vec<usize> },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}
