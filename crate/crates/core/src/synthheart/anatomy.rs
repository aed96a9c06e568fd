use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};

use super::{HeartParams, SynthError};
use crate::geometry::{MultiClassPointCloud, Point3};

pub const MIN_POINTS_PER_CLASS: usize = 64;

/// Axis-aligned ellipsoid `((x-cx)/a)² + (y/b)² + (z/c)² = 1`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Ellipsoid {
    pub center_x: f64,
    pub axes: [f64; 3],
}

impl Ellipsoid {
    /// Implicit function: < 1 inside, 1 on the surface.
    pub fn level(&self, p: &Point3) -> f64 {
        let [a, b, c] = self.axes;
        ((p[0] - self.center_x) / a).powi(2) + (p[1] / b).powi(2) + (p[2] / c).powi(2)
    }

    /// Approximate surface area (Knud Thomsen, ≤ 1.1% error).
    fn area(&self) -> f64 {
        const P: f64 = 1.6075;
        let [a, b, c] = self.axes.map(|v| v.powf(P));
        4.0 * std::f64::consts::PI * ((a * b + a * c + b * c) / 3.0).powf(1.0 / P)
    }

    /// Area-uniform surface sample by rejection on the sphere parametrisation.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point3 {
        let [a, b, c] = self.axes;
        let w_max = (b * c).max(a * c).max(a * b);
        loop {
            let u: [f64; 3] = UnitSphere.sample(rng);
            let w = ((b * c * u[0]).powi(2) + (a * c * u[1]).powi(2) + (a * b * u[2]).powi(2)).sqrt();
            if rng.random::<f64>() * w_max <= w {
                return [self.center_x + a * u[0], b * u[1], c * u[2]];
            }
        }
    }
}

pub(crate) fn lv_endo(h: &HeartParams) -> Ellipsoid {
    Ellipsoid {
        center_x: 0.0,
        axes: h.lv_semi_axes,
    }
}

pub(crate) fn lv_epi(h: &HeartParams) -> Ellipsoid {
    Ellipsoid {
        center_x: 0.0,
        axes: h.epi_semi_axes(),
    }
}

pub(crate) fn rv_cavity(h: &HeartParams) -> Ellipsoid {
    Ellipsoid {
        center_x: h.rv_offset,
        axes: h.rv_semi_axes,
    }
}

fn sample_until<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
    mut propose: impl FnMut(&mut R) -> Option<Point3>,
) -> Result<Vec<Point3>, SynthError> {
    let budget = 2_000 * n;
    let mut out = Vec::with_capacity(n);
    for _ in 0..budget {
        if let Some(p) = propose(rng) {
            out.push(p);
            if out.len() == n {
                return Ok(out);
            }
        }
    }
    Err(SynthError::InvalidParams(
        "surface patch too small to sample; check RV placement".into(),
    ))
}

/// Canonical-frame surfaces, each with `n` area-uniform points.
pub(crate) fn sample_canonical<R: Rng + ?Sized>(
    heart: &HeartParams,
    n: usize,
    rng: &mut R,
) -> Result<[Vec<Point3>; 3], SynthError> {
    let base = heart.base_height;
    let endo = lv_endo(heart);
    let epi = lv_epi(heart);
    let rv = rv_cavity(heart);

    let lv_endo_pts = sample_until(n, rng, |r| Some(endo.sample(r)).filter(|p| p[2] <= base))?;
    let lv_epi_pts = sample_until(n, rng, |r| Some(epi.sample(r)).filter(|p| p[2] <= base))?;

    // RV endocardium: free wall of the RV ellipsoid outside the LV epicardium,
    // plus the septal patch of the LV epicardium inside the RV ellipsoid.
    let p_free = rv.area() / (rv.area() + epi.area());
    let rv_pts = sample_until(n, rng, |r| {
        if r.random::<f64>() < p_free {
            Some(rv.sample(r)).filter(|p| p[2] <= base && epi.level(p) > 1.0)
        } else {
            Some(epi.sample(r)).filter(|p| p[2] <= base && rv.level(p) < 1.0)
        }
    })?;
    Ok([lv_endo_pts, lv_epi_pts, rv_pts])
}

/// End-diastolic anatomy sampled uniformly by area, `points_per_class`
/// points per class, in mm.
pub fn generate_ed(
    heart: &HeartParams,
    points_per_class: usize,
    seed: u64,
) -> Result<MultiClassPointCloud, SynthError> {
    heart.validate()?;
    if points_per_class < MIN_POINTS_PER_CLASS {
        return Err(SynthError::TooFewPoints(points_per_class));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = sample_canonical(heart, points_per_class, &mut rng)?;
    Ok(MultiClassPointCloud::from_classes(
        classes.map(|pts| pts.iter().map(|p| heart.to_world(p)).collect()),
    ))
}
