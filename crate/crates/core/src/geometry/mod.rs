//! Labelled point clouds, nearest-neighbour indexing and the Chamfer metric.

mod chamfer;
mod cloud;
mod kdtree;
mod normalize;
pub mod ply;

pub use chamfer::{
    chamfer, chamfer_indexed, directed_mean_distance, nearest_indices, per_class_chamfer,
};
pub use cloud::{bbox_diagonal, centroid, AnatomicalClass, MultiClassPointCloud};
pub use kdtree::{KdTree, Nearest, BRUTE_FORCE_BELOW, DEFAULT_LEAF_SIZE};
pub use normalize::NormalizationTransform;

use thiserror::Error;

pub type Point3 = [f64; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("class {0} has no points")]
    MissingClass(AnatomicalClass),
    #[error("unknown class label {0} (expected 0, 1 or 2)")]
    UnknownClass(u8),
    #[error("{points} points but {labels} labels")]
    LabelCountMismatch { points: usize, labels: usize },
    #[error("normalization scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("PLY line {line}: {message}")]
    PlyParse { line: usize, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}
