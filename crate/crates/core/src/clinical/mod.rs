//! Chamber volumes, LV mass, ejection fraction and per-case comparison of
//! predicted against gold-standard anatomies.

mod report;
mod volume;

pub use report::{
    anatomy_metrics, cloud_function_metrics, evaluate_population, function_metrics,
    AnatomyMetrics, CaseMetrics, EvaluationCase, EvaluationReport, FunctionMetrics, MeanSd,
    MetricSummary, ANATOMY_METRICS, FUNCTION_METRICS,
};
pub use volume::{
    chamber_volume, convex_hull_2d, ejection_fraction, lv_mass, mass_from_volumes,
    per_case_difference, polygon_area, DEFAULT_SLABS, MIN_POINTS, MIN_SLABS, MYOCARDIAL_DENSITY,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClinicalError {
    #[error("need at least 50 points for a volume, got {0}")]
    TooFewPoints(usize),
    #[error("need at least 5 slabs, got {0}")]
    TooFewSlabs(usize),
    #[error("non-finite coordinates")]
    NonFinite,
    #[error("epicardial volume {epi} ml does not exceed endocardial volume {endo} ml")]
    NonPhysicalWall { endo: f64, epi: f64 },
    #[error("end-diastolic volume must be positive, got {0}")]
    NonPositiveVolume(f64),
    #[error("per-case difference undefined for a zero gold value")]
    ZeroReference,
    #[error("no cases to evaluate")]
    EmptyPopulation,
}
