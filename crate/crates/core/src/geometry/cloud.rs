use serde::{Deserialize, Serialize};

use super::{GeometryError, Point3};

/// Anatomical surface a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnatomicalClass {
    LvEndo = 0,
    LvEpi = 1,
    RvEndo = 2,
}

impl AnatomicalClass {
    pub const ALL: [AnatomicalClass; 3] = [Self::LvEndo, Self::LvEpi, Self::RvEndo];

    pub fn from_label(label: u8) -> Result<Self, GeometryError> {
        match label {
            0 => Ok(Self::LvEndo),
            1 => Ok(Self::LvEpi),
            2 => Ok(Self::RvEndo),
            other => Err(GeometryError::UnknownClass(other)),
        }
    }

    pub fn label(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::LvEndo => "lv-endo",
            Self::LvEpi => "lv-epi",
            Self::RvEndo => "rv-endo",
        }
    }

    /// Column-name fragment used in CSV headers.
    pub fn short(self) -> &'static str {
        match self {
            Self::LvEndo => "lvendo",
            Self::LvEpi => "lvepi",
            Self::RvEndo => "rvendo",
        }
    }
}

impl std::fmt::Display for AnatomicalClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A labelled 3D point set covering the biventricular surfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiClassPointCloud {
    points: Vec<Point3>,
    labels: Vec<AnatomicalClass>,
}

impl MultiClassPointCloud {
    pub fn new(points: Vec<Point3>, labels: Vec<AnatomicalClass>) -> Result<Self, GeometryError> {
        if points.len() != labels.len() {
            return Err(GeometryError::LabelCountMismatch {
                points: points.len(),
                labels: labels.len(),
            });
        }
        Ok(Self { points, labels })
    }

    /// Concatenates per-class point lists in class order.
    pub fn from_classes(per_class: [Vec<Point3>; 3]) -> Self {
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for (class, pts) in AnatomicalClass::ALL.into_iter().zip(per_class) {
            labels.extend(std::iter::repeat_n(class, pts.len()));
            points.extend(pts);
        }
        Self { points, labels }
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn labels(&self) -> &[AnatomicalClass] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn class_points(&self, class: AnatomicalClass) -> Vec<Point3> {
        self.points
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == class)
            .map(|(p, _)| *p)
            .collect()
    }

    pub fn split_by_class(&self) -> [Vec<Point3>; 3] {
        let mut out: [Vec<Point3>; 3] = Default::default();
        for (p, l) in self.points.iter().zip(&self.labels) {
            out[l.index()].push(*p);
        }
        out
    }

    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for l in &self.labels {
            counts[l.index()] += 1;
        }
        counts
    }

    /// Fails with the first class that has no points.
    pub fn validate_complete(&self) -> Result<(), GeometryError> {
        let counts = self.class_counts();
        for class in AnatomicalClass::ALL {
            if counts[class.index()] == 0 {
                return Err(GeometryError::MissingClass(class));
            }
        }
        Ok(())
    }

    pub fn centroid(&self) -> Point3 {
        centroid(&self.points)
    }

    /// Length of the diagonal of the axis-aligned bounding box.
    pub fn bbox_diagonal(&self) -> f64 {
        bbox_diagonal(&self.points)
    }

    /// Reorders points (and labels) so that output `i` is input `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            points: order.iter().map(|&i| self.points[i]).collect(),
            labels: order.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn map_points(&self, mut f: impl FnMut(AnatomicalClass, &Point3) -> Point3) -> Self {
        Self {
            points: self
                .points
                .iter()
                .zip(&self.labels)
                .map(|(p, &l)| f(l, p))
                .collect(),
            labels: self.labels.clone(),
        }
    }
}

pub fn centroid(points: &[Point3]) -> Point3 {
    let n = points.len().max(1) as f64;
    let mut c = [0.0; 3];
    for p in points {
        for d in 0..3 {
            c[d] += p[d];
        }
    }
    c.map(|v| v / n)
}

pub fn bbox_diagonal(points: &[Point3]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for d in 0..3 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    (0..3).map(|d| (hi[d] - lo[d]).powi(2)).sum::<f64>().sqrt()
}
