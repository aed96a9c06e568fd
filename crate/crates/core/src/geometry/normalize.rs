use serde::{Deserialize, Serialize};

use super::{GeometryError, MultiClassPointCloud, Point3};

/// Affine map from millimetres to normalized units: `(p - translation) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizationTransform {
    pub translation: [f64; 3],
    /// Millimetres per normalized unit.
    pub scale: f64,
}

impl Default for NormalizationTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl NormalizationTransform {
    pub fn new(translation: [f64; 3], scale: f64) -> Result<Self, GeometryError> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(GeometryError::NonPositiveScale(scale));
        }
        Ok(Self { translation, scale })
    }

    pub fn identity() -> Self {
        Self {
            translation: [0.0; 3],
            scale: 1.0,
        }
    }

    /// Dataset-level transform: mean per-cloud centroid and mean per-cloud
    /// bounding-box diagonal.
    pub fn fit<'a>(
        clouds: impl IntoIterator<Item = &'a MultiClassPointCloud>,
    ) -> Result<Self, GeometryError> {
        let mut count = 0usize;
        let mut centroid = [0.0; 3];
        let mut diagonal = 0.0;
        for cloud in clouds {
            if cloud.is_empty() {
                return Err(GeometryError::EmptyPointSet);
            }
            let c = cloud.centroid();
            for d in 0..3 {
                centroid[d] += c[d];
            }
            diagonal += cloud.bbox_diagonal();
            count += 1;
        }
        if count == 0 {
            return Err(GeometryError::EmptyPointSet);
        }
        let n = count as f64;
        Self::new(centroid.map(|v| v / n), diagonal / n)
    }

    pub fn normalize_point(&self, p: &Point3) -> Point3 {
        [
            (p[0] - self.translation[0]) / self.scale,
            (p[1] - self.translation[1]) / self.scale,
            (p[2] - self.translation[2]) / self.scale,
        ]
    }

    pub fn denormalize_point(&self, p: &Point3) -> Point3 {
        [
            p[0] * self.scale + self.translation[0],
            p[1] * self.scale + self.translation[1],
            p[2] * self.scale + self.translation[2],
        ]
    }

    pub fn normalize(&self, cloud: &MultiClassPointCloud) -> MultiClassPointCloud {
        cloud.map_points(|_, p| self.normalize_point(p))
    }

    pub fn denormalize(&self, cloud: &MultiClassPointCloud) -> MultiClassPointCloud {
        cloud.map_points(|_, p| self.denormalize_point(p))
    }

    pub fn normalize_points(&self, points: &[Point3]) -> Vec<Point3> {
        points.iter().map(|p| self.normalize_point(p)).collect()
    }

    pub fn denormalize_points(&self, points: &[Point3]) -> Vec<Point3> {
        points.iter().map(|p| self.denormalize_point(p)).collect()
    }
}
