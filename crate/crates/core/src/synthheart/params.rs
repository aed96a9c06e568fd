use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::geometry::Point3;

/// Idealized biventricular anatomy at end-diastole.
///
/// In the canonical frame the LV long axis is the z axis with the apex at
/// `-c` and the open base at `z = base_height`. The RV cavity is bounded by
/// an ellipsoid centred at `(rv_offset, 0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeartParams {
    /// LV endocardial semi-axes `(a, b, c)` in mm, `c` along the long axis.
    pub lv_semi_axes: [f64; 3],
    pub wall_thickness: f64,
    /// Lateral displacement of the RV ellipsoid centre (mm).
    pub rv_offset: f64,
    /// RV ellipsoid semi-axes in mm.
    pub rv_semi_axes: [f64; 3],
    pub base_height: f64,
    /// Euler angles (x, y, z) in radians.
    pub orientation: [f64; 3],
    pub translation: [f64; 3],
    pub global_scale: f64,
}

impl Default for HeartParams {
    fn default() -> Self {
        Self {
            lv_semi_axes: [27.0, 27.0, 60.0],
            wall_thickness: 9.0,
            rv_offset: 34.0,
            rv_semi_axes: [28.0, 36.0, 52.0],
            base_height: 21.0,
            orientation: [0.0; 3],
            translation: [0.0; 3],
            global_scale: 1.0,
        }
    }
}

impl HeartParams {
    pub fn epi_semi_axes(&self) -> [f64; 3] {
        self.lv_semi_axes.map(|s| s + self.wall_thickness)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidParams(m));
        let all = self
            .lv_semi_axes
            .iter()
            .chain(&self.rv_semi_axes)
            .chain(&self.orientation)
            .chain(&self.translation)
            .chain([&self.wall_thickness, &self.rv_offset, &self.base_height, &self.global_scale]);
        if all.into_iter().any(|v| !v.is_finite()) {
            return bad("all heart parameters must be finite".into());
        }
        if self.lv_semi_axes.iter().chain(&self.rv_semi_axes).any(|&s| s <= 0.0) {
            return bad("semi-axes must be positive".into());
        }
        if self.wall_thickness <= 0.0 {
            return bad(format!("wall thickness must be positive, got {}", self.wall_thickness));
        }
        if self.global_scale <= 0.0 {
            return bad(format!("global scale must be positive, got {}", self.global_scale));
        }
        let c = self.lv_semi_axes[2];
        if !(self.base_height > -0.5 * c && self.base_height < c) {
            return bad(format!("base height {} outside (-c/2, c)", self.base_height));
        }
        let epi_x = self.epi_semi_axes()[0];
        let rx = self.rv_semi_axes[0];
        if !(self.rv_offset - rx < epi_x && self.rv_offset + rx > epi_x) {
            return bad("RV ellipsoid must straddle the LV epicardium along x".into());
        }
        if self.rv_offset - rx <= -epi_x {
            return bad("RV ellipsoid must not wrap past the LV axis".into());
        }
        Ok(())
    }

    fn rotation(&self) -> [[f64; 3]; 3] {
        let [ax, ay, az] = self.orientation;
        let (sx, cx) = ax.sin_cos();
        let (sy, cy) = ay.sin_cos();
        let (sz, cz) = az.sin_cos();
        // Rz * Ry * Rx
        [
            [cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx],
            [sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx],
            [-sy, cy * sx, cy * cx],
        ]
    }

    /// Canonical frame to scanner frame.
    pub fn to_world(&self, p: &Point3) -> Point3 {
        let r = self.rotation();
        let s = self.global_scale;
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = s * (r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2]) + self.translation[i];
        }
        out
    }

    /// Scanner frame to canonical frame.
    pub fn to_canonical(&self, p: &Point3) -> Point3 {
        let r = self.rotation();
        let q = [
            p[0] - self.translation[0],
            p[1] - self.translation[1],
            p[2] - self.translation[2],
        ];
        let mut out = [0.0; 3];
        for (j, o) in out.iter_mut().enumerate() {
            *o = (r[0][j] * q[0] + r[1][j] * q[1] + r[2][j] * q[2]) / self.global_scale;
        }
        out
    }

    /// Exact LV cavity volume in ml (truncated ellipsoid).
    pub fn lv_endo_volume_ml(&self) -> f64 {
        let [a, b, c] = self.lv_semi_axes;
        truncated_ellipsoid_volume(a, b, c, self.base_height) * self.global_scale.powi(3) / 1000.0
    }

    /// Exact volume enclosed by the LV epicardium and the base plane, in ml.
    pub fn lv_epi_volume_ml(&self) -> f64 {
        let [a, b, c] = self.epi_semi_axes();
        truncated_ellipsoid_volume(a, b, c, self.base_height) * self.global_scale.powi(3) / 1000.0
    }
}

/// Volume of `x²/a² + y²/b² + z²/c² ≤ 1` below the plane `z = h`.
pub fn truncated_ellipsoid_volume(a: f64, b: f64, c: f64, h: f64) -> f64 {
    let h = h.clamp(-c, c);
    PI * a * b * ((h + c) - (h.powi(3) + c.powi(3)) / (3.0 * c * c))
}

/// Regional hypo-contraction about the LV long axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AkinesiaSector {
    /// Sector centre as an angle in the canonical xy plane (radians).
    pub center: f64,
    /// Full angular width in `[0, 2π)`.
    pub width: f64,
    /// Fraction of contraction removed at the sector core, in `[0, 1]`.
    pub attenuation: f64,
}

impl AkinesiaSector {
    const TAPER: f64 = 0.35;

    /// Attenuation weight in `[0, 1]` at polar angle `theta`; flat in the
    /// core with a cosine taper at the edges.
    pub fn weight(&self, theta: f64) -> f64 {
        if self.width <= 0.0 {
            return 0.0;
        }
        let mut d = (theta - self.center).rem_euclid(2.0 * PI);
        if d > PI {
            d = 2.0 * PI - d;
        }
        let half = 0.5 * self.width;
        let taper = Self::TAPER.min(half);
        if d <= half - taper {
            1.0
        } else if d < half {
            0.5 * (1.0 + (PI * (d - (half - taper)) / taper).cos())
        } else {
            0.0
        }
    }
}

/// End-diastole to end-systole contraction model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformationParams {
    pub radial_contraction: f64,
    pub longitudinal_shortening: f64,
    pub wall_thickening: f64,
    pub akinesia: Option<AkinesiaSector>,
    /// Standard deviation (mm) of the per-coordinate jitter.
    pub noise_amplitude: f64,
}

impl Default for DeformationParams {
    fn default() -> Self {
        Self {
            radial_contraction: 0.28,
            longitudinal_shortening: 0.15,
            wall_thickening: 0.45,
            akinesia: None,
            noise_amplitude: 0.5,
        }
    }
}

impl DeformationParams {
    pub fn identity() -> Self {
        Self {
            radial_contraction: 0.0,
            longitudinal_shortening: 0.0,
            wall_thickening: 0.0,
            akinesia: None,
            noise_amplitude: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let frac = |name: &str, v: f64| {
            if (0.0..1.0).contains(&v) {
                Ok(())
            } else {
                Err(SynthError::InvalidParams(format!("{name} must be in [0, 1), got {v}")))
            }
        };
        frac("radial contraction", self.radial_contraction)?;
        frac("longitudinal shortening", self.longitudinal_shortening)?;
        frac("wall thickening", self.wall_thickening)?;
        if !(self.noise_amplitude >= 0.0 && self.noise_amplitude.is_finite()) {
            return Err(SynthError::InvalidParams("noise amplitude must be >= 0".into()));
        }
        if let Some(s) = &self.akinesia {
            if !(0.0..2.0 * PI).contains(&s.width) {
                return Err(SynthError::InvalidParams(format!(
                    "akinesia width must be in [0, 2pi), got {}",
                    s.width
                )));
            }
            if !(0.0..=1.0).contains(&s.attenuation) || !s.center.is_finite() {
                return Err(SynthError::InvalidParams("akinesia attenuation must be in [0, 1]".into()));
            }
        }
        Ok(())
    }
}

fn gauss<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).expect("finite sd").sample(rng)
}

fn clamped<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    gauss(rng, mean, sd).clamp(lo, hi)
}

const DEG: f64 = PI / 180.0;

/// Healthy anatomy prior.
pub fn sample_normal_anatomy<R: Rng + ?Sized>(rng: &mut R) -> HeartParams {
    let a = clamped(rng, 27.0, 1.5, 22.0, 32.0);
    let b = a * clamped(rng, 1.0, 0.04, 0.9, 1.1);
    let c = clamped(rng, 60.0, 3.0, 50.0, 70.0);
    let wall = clamped(rng, 9.0, 0.7, 7.0, 11.0);
    let base = c * clamped(rng, 0.35, 0.02, 0.3, 0.4);
    let rx = clamped(rng, 28.0, 1.5, 24.0, 32.0);
    let rv = [
        rx,
        clamped(rng, 36.0, 2.0, 30.0, 42.0),
        c * clamped(rng, 0.87, 0.03, 0.8, 0.94),
    ];
    let offset = a + wall + clamped(rng, -2.0, 1.5, -6.0, 2.0);
    HeartParams {
        lv_semi_axes: [a, b, c],
        wall_thickness: wall,
        rv_offset: offset,
        rv_semi_axes: rv,
        base_height: base,
        orientation: [0; 3].map(|_| rng.random_range(-5.0 * DEG..5.0 * DEG)),
        translation: [0; 3].map(|_| gauss(rng, 0.0, 3.0)),
        global_scale: clamped(rng, 1.0, 0.03, 0.92, 1.08),
    }
}

/// Healthy contraction prior.
pub fn sample_normal_deformation<R: Rng + ?Sized>(rng: &mut R) -> DeformationParams {
    DeformationParams {
        radial_contraction: clamped(rng, 0.30, 0.045, 0.16, 0.42),
        longitudinal_shortening: clamped(rng, 0.15, 0.025, 0.08, 0.22),
        wall_thickening: clamped(rng, 0.45, 0.08, 0.25, 0.65),
        akinesia: None,
        noise_amplitude: 0.5,
    }
}

/// Post-infarction remodelling of an ED anatomy at severity `s ∈ [0, 1]`:
/// dilation, a more spherical cavity and a thinner wall.
pub fn remodel(mut heart: HeartParams, s: f64) -> HeartParams {
    let gap = heart.rv_offset - heart.epi_semi_axes()[0];
    heart.lv_semi_axes[0] *= 1.0 + 0.14 * s;
    heart.lv_semi_axes[1] *= 1.0 + 0.14 * s;
    heart.lv_semi_axes[2] *= 1.0 - 0.04 * s;
    heart.base_height *= 1.0 - 0.04 * s;
    heart.wall_thickness *= 1.0 - 0.2 * s;
    heart.rv_offset = heart.epi_semi_axes()[0] + gap;
    heart
}

/// Infarction severity prior.
pub fn sample_severity<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(0.2..1.0)
}

/// Contraction of an infarcted heart: an anterior akinetic sector whose
/// attenuation grows with severity, and slightly reduced global function.
pub fn sample_mi_deformation<R: Rng + ?Sized>(rng: &mut R, severity: f64) -> DeformationParams {
    let mut dp = sample_normal_deformation(rng);
    dp.radial_contraction *= 1.0 - 0.05 * severity;
    dp.akinesia = Some(AkinesiaSector {
        center: 0.5 * PI + gauss(rng, 0.0, 0.2),
        width: rng.random_range(60.0 * DEG..120.0 * DEG),
        attenuation: (0.4 + 0.4 * severity).min(1.0),
    });
    dp
}
