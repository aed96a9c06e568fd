use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::anatomy::{lv_epi, rv_cavity};
use super::{DeformationParams, HeartParams, SynthError};
use crate::geometry::{AnatomicalClass, MultiClassPointCloud, Point3};

/// Points this close to the LV epicardium count as septal RV points.
const SEPTUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    LvEndo,
    LvEpi,
    RvFreeWall,
}

fn region(heart: &HeartParams, class: AnatomicalClass, p: &Point3) -> Region {
    match class {
        AnatomicalClass::LvEndo => Region::LvEndo,
        AnatomicalClass::LvEpi => Region::LvEpi,
        AnatomicalClass::RvEndo if lv_epi(heart).level(p) <= 1.0 + SEPTUM_TOLERANCE => Region::LvEpi,
        AnatomicalClass::RvEndo => Region::RvFreeWall,
    }
}

fn contract_region(heart: &HeartParams, dp: &DeformationParams, region: Region, p: &Point3) -> Point3 {
    let base = heart.base_height;
    if region == Region::RvFreeWall {
        let cx = rv_cavity(heart).center_x;
        let radial = 1.0 - dp.radial_contraction;
        return [
            cx + radial * (p[0] - cx),
            radial * p[1],
            p[2] + dp.longitudinal_shortening * (base - p[2]),
        ];
    }
    let keep = match &dp.akinesia {
        Some(s) if p[0] != 0.0 || p[1] != 0.0 => 1.0 - s.attenuation * s.weight(p[1].atan2(p[0])),
        _ => 1.0,
    };
    let thickening = if region == Region::LvEpi { dp.wall_thickening } else { 0.0 };
    let radial = 1.0 - dp.radial_contraction * keep * (1.0 - thickening);
    let shorten = dp.longitudinal_shortening * keep;
    [radial * p[0], radial * p[1], p[2] + shorten * (base - p[2])]
}

/// Deterministic contraction of one canonical-frame point. Septal RV points
/// move with the LV epicardium.
pub(crate) fn contract(
    heart: &HeartParams,
    dp: &DeformationParams,
    class: AnatomicalClass,
    p: &Point3,
) -> Point3 {
    contract_region(heart, dp, region(heart, class, p), p)
}

/// Determinant of the Jacobian of the contraction map at a canonical-frame
/// point `p`, by central differences within the point's surface region.
pub fn contraction_jacobian_det(
    heart: &HeartParams,
    dp: &DeformationParams,
    class: AnatomicalClass,
    p: &Point3,
) -> f64 {
    let h = 1e-5;
    let r = region(heart, class, p);
    let mut j = [[0.0; 3]; 3];
    for k in 0..3 {
        let mut lo = *p;
        let mut hi = *p;
        lo[k] -= h;
        hi[k] += h;
        let (a, b) = (contract_region(heart, dp, r, &lo), contract_region(heart, dp, r, &hi));
        for i in 0..3 {
            j[i][k] = (b[i] - a[i]) / (2.0 * h);
        }
    }
    j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
        + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0])
}

/// End-systolic cloud from an end-diastolic cloud generated with `heart`.
///
/// Points are mapped back to the canonical frame, contracted radially toward
/// the LV (or RV) long axis and longitudinally toward the base, then posed
/// again and jittered.
pub fn deform_to_es(
    ed: &MultiClassPointCloud,
    heart: &HeartParams,
    dp: &DeformationParams,
    seed: u64,
) -> Result<MultiClassPointCloud, SynthError> {
    heart.validate()?;
    dp.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, dp.noise_amplitude).expect("validated amplitude");
    Ok(ed.map_points(|class, p| {
        let q = contract(heart, dp, class, &heart.to_canonical(p));
        let mut w = heart.to_world(&q);
        if dp.noise_amplitude > 0.0 {
            for v in &mut w {
                *v += noise.sample(&mut rng);
            }
        }
        w
    }))
}
