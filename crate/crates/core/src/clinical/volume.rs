use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use super::ClinicalError;
use crate::geometry::Point3;

pub const DEFAULT_SLABS: usize = 20;
pub const MIN_POINTS: usize = 50;
pub const MIN_SLABS: usize = 5;
/// Myocardial tissue density in g/ml.
pub const MYOCARDIAL_DENSITY: f64 = 1.05;

/// Orthonormal frame with `axis` the direction of largest spread.
struct PrincipalFrame {
    center: Vector3<f64>,
    axis: Vector3<f64>,
    u: Vector3<f64>,
    v: Vector3<f64>,
}

impl PrincipalFrame {
    fn fit(points: &[Point3]) -> Self {
        let n = points.len() as f64;
        let center = points
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + Vector3::from(*p))
            / n;
        let mut cov = Matrix3::zeros();
        for p in points {
            let d = Vector3::from(*p) - center;
            cov += d * d.transpose();
        }
        cov /= n;
        let eig = SymmetricEigen::new(cov);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let axis = eig.eigenvectors.column(order[0]).into_owned();
        let u = eig.eigenvectors.column(order[1]).into_owned();
        let v = axis.cross(&u);
        Self { center, axis, u, v }
    }

    fn project(&self, p: &Point3) -> (f64, [f64; 2]) {
        let d = Vector3::from(*p) - self.center;
        (d.dot(&self.axis), [d.dot(&self.u), d.dot(&self.v)])
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull (monotone chain), counter-clockwise without repeated endpoint.
pub fn convex_hull_2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Shoelace area of a simple polygon.
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        twice += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * twice.abs()
}

/// Cross-section area of one slab at its mid-plane. The radial spread of
/// points about the slab centroid is fitted linearly in the axial
/// coordinate and every point is moved to its mid-plane radius before
/// taking the hull, which removes the overestimate from tapering walls.
fn slab_area(members: &[(f64, [f64; 2])], mid: f64) -> f64 {
    if members.len() < 3 {
        return 0.0;
    }
    let n = members.len() as f64;
    let mut m = [0.0; 2];
    for (_, q) in members {
        m[0] += q[0] / n;
        m[1] += q[1] / n;
    }
    let radii: Vec<f64> = members
        .iter()
        .map(|(_, q)| ((q[0] - m[0]).powi(2) + (q[1] - m[1]).powi(2)).sqrt())
        .collect();
    let t_mean = members.iter().map(|(t, _)| t).sum::<f64>() / n;
    let r_mean = radii.iter().sum::<f64>() / n;
    let (mut stt, mut str_) = (0.0, 0.0);
    for ((t, _), r) in members.iter().zip(&radii) {
        stt += (t - t_mean).powi(2);
        str_ += (t - t_mean) * (r - r_mean);
    }
    let slope = if stt > 0.0 { str_ / stt } else { 0.0 };
    let r_mid = r_mean + slope * (mid - t_mean);

    let corrected: Vec<[f64; 2]> = members
        .iter()
        .map(|(t, q)| {
            let r_fit = r_mean + slope * (t - t_mean);
            let f = if r_fit > 0.0 && r_mid > 0.0 { r_mid / r_fit } else { 1.0 };
            [m[0] + f * (q[0] - m[0]), m[1] + f * (q[1] - m[1])]
        })
        .collect();
    polygon_area(&convex_hull_2d(&corrected))
}

/// Disc-summation volume of the region bounded by a sampled surface, in ml.
///
/// Points are aligned to their principal long axis and cut into `n_slabs`
/// equal slabs spanning the axial extent; each slab contributes its
/// mid-plane convex-hull area times the slab thickness.
pub fn chamber_volume(points: &[Point3], n_slabs: usize) -> Result<f64, ClinicalError> {
    if points.len() < MIN_POINTS {
        return Err(ClinicalError::TooFewPoints(points.len()));
    }
    if n_slabs < MIN_SLABS {
        return Err(ClinicalError::TooFewSlabs(n_slabs));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ClinicalError::NonFinite);
    }
    let frame = PrincipalFrame::fit(points);
    let projected: Vec<(f64, [f64; 2])> = points.iter().map(|p| frame.project(p)).collect();
    let (lo, hi) = projected
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (t, _)| (lo.min(*t), hi.max(*t)));
    let thickness = (hi - lo) / n_slabs as f64;
    if !(thickness > 0.0) {
        return Ok(0.0);
    }
    let mut slabs: Vec<Vec<(f64, [f64; 2])>> = vec![Vec::new(); n_slabs];
    for &(t, q) in &projected {
        let k = (((t - lo) / thickness) as usize).min(n_slabs - 1);
        slabs[k].push((t, q));
    }
    let mm3: f64 = slabs
        .iter()
        .enumerate()
        .map(|(k, members)| slab_area(members, lo + (k as f64 + 0.5) * thickness) * thickness)
        .sum();
    Ok(mm3 / 1000.0)
}

/// LV myocardial mass in grams from endocardial and epicardial samples.
pub fn lv_mass(endo: &[Point3], epi: &[Point3], n_slabs: usize) -> Result<f64, ClinicalError> {
    let v_endo = chamber_volume(endo, n_slabs)?;
    let v_epi = chamber_volume(epi, n_slabs)?;
    mass_from_volumes(v_endo, v_epi)
}

pub fn mass_from_volumes(v_endo: f64, v_epi: f64) -> Result<f64, ClinicalError> {
    if v_epi <= v_endo {
        return Err(ClinicalError::NonPhysicalWall { endo: v_endo, epi: v_epi });
    }
    Ok(MYOCARDIAL_DENSITY * (v_epi - v_endo))
}

/// Ejection fraction in percent.
pub fn ejection_fraction(edv: f64, esv: f64) -> Result<f64, ClinicalError> {
    if !(edv > 0.0) {
        return Err(ClinicalError::NonPositiveVolume(edv));
    }
    Ok((edv - esv) / edv * 100.0)
}

/// `|predicted − gold| / |gold|` in percent.
pub fn per_case_difference(predicted: f64, gold: f64) -> Result<f64, ClinicalError> {
    if gold == 0.0 {
        return Err(ClinicalError::ZeroReference);
    }
    Ok((predicted - gold).abs() / gold.abs() * 100.0)
}
