//! Synthetic biventricular cohorts: an idealized ellipsoidal phantom at
//! end-diastole, an analytic contraction to end-systole, and normal /
//! infarcted groups with censored event times.

mod anatomy;
mod cohort;
mod deform;
mod params;

pub use anatomy::{generate_ed, MIN_POINTS_PER_CLASS};
pub use cohort::{
    generate_cohort, read_manifest, sample_event_time, write_cohort, CohortConfig, Group,
    ManifestEntry, SubjectRecord, MANIFEST_FILE, PARAMETERS_FILE,
};
pub use deform::{contraction_jacobian_det, deform_to_es};
pub use params::{
    remodel, sample_mi_deformation, sample_normal_anatomy, sample_normal_deformation,
    sample_severity, truncated_ellipsoid_volume, AkinesiaSector, DeformationParams, HeartParams,
};

use thiserror::Error;

use crate::geometry::{GeometryError, Point3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic heart parameters: {0}")]
    InvalidParams(String),
    #[error("need at least 64 points per class, got {0}")]
    TooFewPoints(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Implicit LV endocardial function at a scanner-frame point, shifted so it
/// is positive outside the cavity and zero on the surface.
pub fn lv_endo_level(heart: &HeartParams, p: &Point3) -> f64 {
    anatomy::lv_endo(heart).level(&heart.to_canonical(p)) - 1.0
}

/// Maps scanner-frame points to the canonical heart frame.
pub fn canonical_points(heart: &HeartParams, points: &[Point3]) -> Vec<Point3> {
    points.iter().map(|p| heart.to_canonical(p)).collect()
}
